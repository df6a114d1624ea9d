#include "ddpp/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include <boost/math/distributions/students_t.hpp>

#include "ddpp/dpp.hpp"

namespace ddpp {

RdeReport rde_from_logdets(double gt_logdet, double sel_logdet) {
  if (!(gt_logdet > 0.0))
    throw Error(ErrorKind::scaling_violation,
                "ground-truth log det " + std::to_string(gt_logdet) + " is not positive; rescale the features");
  RdeReport r{gt_logdet, sel_logdet, 0.0};
  r.rde = std::isnan(sel_logdet) ? 1.0 : std::clamp(1.0 - sel_logdet / gt_logdet, 0.0, 1.0);
  return r;
}

RdeReport rde(const Matrix& z, const IndexList& gt_indices, const IndexList& sel_indices) {
  if (gt_indices.empty() || sel_indices.empty()) throw Error(ErrorKind::invalid_input, "rde: empty index set");
  const SubsetLogdet gt = subset_logdet(z, gt_indices);
  const SubsetLogdet sel = subset_logdet(z, sel_indices);
  if (gt.singular) throw Error(ErrorKind::scaling_violation, "rde: ground-truth set is singular");
  return rde_from_logdets(gt.value, sel.value);
}

Summary summarize(const std::vector<double>& xs) {
  Summary s;
  s.n = xs.size();
  if (xs.empty()) return s;
  s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

TTestResult welch_ttest(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() < 2 || ys.size() < 2) throw Error(ErrorKind::invalid_input, "welch_ttest: need at least two values per sample");
  const Summary a = summarize(xs);
  const Summary b = summarize(ys);
  const double va = a.std * a.std / static_cast<double>(a.n);
  const double vb = b.std * b.std / static_cast<double>(b.n);
  const double se2 = va + vb;
  if (!(se2 > 0.0)) throw Error(ErrorKind::degenerate_input, "welch_ttest: both samples have zero variance");
  TTestResult r;
  r.t = (a.mean - b.mean) / std::sqrt(se2);
  r.df = se2 * se2 /
         (va * va / static_cast<double>(a.n - 1) + vb * vb / static_cast<double>(b.n - 1));
  const boost::math::students_t dist(r.df);
  r.p = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t))));
  return r;
}

std::vector<std::int64_t> knn_predict(const Matrix& train_z, const std::vector<std::int64_t>& train_labels,
                                      const Matrix& test_z, Index k_neighbors) {
  if (train_z.rows() == 0) throw Error(ErrorKind::invalid_input, "knn: empty train set");
  if (static_cast<Index>(train_labels.size()) != train_z.rows())
    throw Error(ErrorKind::invalid_input, "knn: train label count differs from train rows");
  if (k_neighbors < 1) throw Error(ErrorKind::invalid_input, "knn: k must be at least 1");
  if (test_z.cols() != train_z.cols()) throw Error(ErrorKind::invalid_input, "knn: dimension mismatch");

  const Index k = std::min(k_neighbors, train_z.rows());
  std::vector<std::int64_t> out;
  out.reserve(static_cast<std::size_t>(test_z.rows()));
  IndexList order(static_cast<std::size_t>(train_z.rows()));
  for (Index q = 0; q < test_z.rows(); ++q) {
    // Exact squared distances; the expanded form loses the tie structure.
    Vector d(train_z.rows());
    for (Index i = 0; i < train_z.rows(); ++i) d(i) = (train_z.row(i) - test_z.row(q)).squaredNorm();
    std::iota(order.begin(), order.end(), Index{0});
    std::partial_sort(order.begin(), order.begin() + k, order.end(), [&d](Index a, Index b) {
      return d(a) < d(b) || (d(a) == d(b) && a < b);
    });
    std::map<std::int64_t, Index> votes;
    for (Index r = 0; r < k; ++r) ++votes[train_labels[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])]];
    Index best_votes = 0;
    for (const auto& [label, v] : votes) best_votes = std::max(best_votes, v);
    for (Index r = 0; r < k; ++r) {
      const std::int64_t label = train_labels[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])];
      if (votes[label] == best_votes) {
        out.push_back(label);
        break;
      }
    }
  }
  return out;
}

double macro_f1(const std::vector<std::int64_t>& truth, const std::vector<std::int64_t>& predicted) {
  if (truth.size() != predicted.size()) throw Error(ErrorKind::invalid_input, "macro_f1: length mismatch");
  std::set<std::int64_t> labels(truth.begin(), truth.end());
  labels.insert(predicted.begin(), predicted.end());
  if (labels.empty()) return 0.0;
  double total = 0.0;
  for (std::int64_t c : labels) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      const bool t = truth[i] == c, p = predicted[i] == c;
      tp += t && p;
      fp += !t && p;
      fn += t && !p;
    }
    const double denom = 2 * tp + fp + fn;
    total += denom > 0 ? 2 * tp / denom : 0.0;
  }
  return total / static_cast<double>(labels.size());
}

KnnScore knn_eval(const Matrix& train_z, const std::vector<std::int64_t>& train_labels, const Matrix& test_z,
                  const std::vector<std::int64_t>& test_labels, Index k_neighbors) {
  if (static_cast<Index>(test_labels.size()) != test_z.rows())
    throw Error(ErrorKind::invalid_input, "knn: test label count differs from test rows");
  const auto pred = knn_predict(train_z, train_labels, test_z, k_neighbors);
  KnnScore s;
  if (pred.empty()) return s;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == test_labels[i];
  s.accuracy = static_cast<double>(hits) / static_cast<double>(pred.size());
  s.macro_f1 = macro_f1(test_labels, pred);
  return s;
}

Matrix pca2d(const Matrix& z) {
  if (z.rows() < 2) throw Error(ErrorKind::invalid_input, "pca2d: need at least two samples");
  const Matrix centered = z.rowwise() - z.colwise().mean();
  Matrix cov = centered.transpose() * centered / static_cast<double>(z.rows() - 1);
  cov = 0.5 * (cov + cov.transpose()).eval();
  const SpectralDecomp sd = spectral_decomp(cov);
  Matrix axes = Matrix::Zero(z.cols(), 2);
  for (Index j = 0; j < std::min<Index>(2, z.cols()); ++j) {
    Vector v = sd.eigenvectors.col(j);
    Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    axes.col(j) = v;
  }
  return centered * axes;
}

}  // namespace ddpp
