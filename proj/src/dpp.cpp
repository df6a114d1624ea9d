#include "ddpp/dpp.hpp"

#include <numeric>
#include <set>
#include <string>

namespace ddpp {

MapResult greedy_map(const Matrix& l, Index k, const IndexList& preselected, const IndexList& excluded) {
  if (l.rows() != l.cols()) throw Error(ErrorKind::invalid_input, "greedy_map: kernel is not square");
  if (!is_symmetric(l)) throw Error(ErrorKind::invalid_input, "greedy_map: kernel is not symmetric");
  return greedy_map_with(GramKernel(l), k, preselected, excluded);
}

MapResult greedy_map_features(const Matrix& z, Index k, const IndexList& preselected, const IndexList& excluded) {
  if (!z.allFinite()) throw Error(ErrorKind::invalid_input, "greedy_map: non-finite feature");
  return greedy_map_with(FeatureKernel(z), k, preselected, excluded);
}

namespace {

double binomial(Index n, Index k) {
  double c = 1.0;
  for (Index i = 1; i <= k; ++i) c = c * static_cast<double>(n - k + i) / static_cast<double>(i);
  return c;
}

// Advances idx to the next k-combination of [0, n) in lexicographic order.
bool next_combination(IndexList& idx, Index n) {
  const Index k = static_cast<Index>(idx.size());
  for (Index i = k - 1; i >= 0; --i) {
    if (idx[i] < n - k + i) {
      ++idx[i];
      for (Index j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
      return true;
    }
  }
  return false;
}

double log_or_neg_inf(double det) {
  return det > 0.0 ? std::log(det) : -std::numeric_limits<double>::infinity();
}

}  // namespace

MapResult brute_force_map(const Matrix& l, Index k) {
  const Index n = l.rows();
  if (l.rows() != l.cols()) throw Error(ErrorKind::invalid_input, "brute_force_map: kernel is not square");
  if (k < 0 || k > n) throw Error(ErrorKind::invalid_input, "brute_force_map: k out of range");
  if (binomial(n, k) > kBruteForceLimit)
    throw Error(ErrorKind::too_large, "brute_force_map: C(" + std::to_string(n) + ", " + std::to_string(k) +
                                          ") exceeds the enumeration limit");
  IndexList idx(static_cast<std::size_t>(k));
  std::iota(idx.begin(), idx.end(), Index{0});
  IndexList best = idx;
  double best_det = -std::numeric_limits<double>::infinity();
  do {
    const double det = k == 0 ? 1.0 : principal_submatrix(l, idx).determinant();
    if (det > best_det) {
      best_det = det;
      best = idx;
    }
  } while (k > 0 && next_combination(idx, n));

  MapResult out;
  out.indices = best;
  for (Index t = 1; t <= k; ++t) {
    const IndexList prefix(best.begin(), best.begin() + t);
    out.stepwise_logdets.push_back(log_or_neg_inf(principal_submatrix(l, prefix).determinant()));
  }
  out.rank_exhausted = !(best_det > 0.0);
  return out;
}

SubsetLogdet subset_logdet(const Matrix& z, const IndexList& a) {
  if (a.empty()) throw Error(ErrorKind::invalid_input, "subset_logdet: empty index set");
  std::set<Index> seen;
  for (Index i : a) {
    if (i < 0 || i >= z.rows()) throw Error(ErrorKind::invalid_input, "subset_logdet: index out of range");
    if (!seen.insert(i).second) throw Error(ErrorKind::invalid_input, "subset_logdet: duplicate index");
  }
  const Matrix l = gram(select_rows(z, a));
  const double floor = kGainTol * std::max(0.0, l.diagonal().maxCoeff());
  SubsetLogdet out;
  Index pivot = -1;
  if (!try_cholesky_logdet(l, floor, out.value, pivot)) {
    out.value = -std::numeric_limits<double>::infinity();
    out.singular = true;
  }
  return out;
}

}  // namespace ddpp
