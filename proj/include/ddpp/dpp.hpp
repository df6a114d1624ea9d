#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "ddpp/linalg.hpp"

namespace ddpp {

/// Relative early-stop threshold: a candidate whose squared pivot is at most
/// kGainTol * (max initial diagonal) adds no rank.
inline constexpr double kGainTol = 1e-12;

struct MapResult {
  IndexList indices;
  std::vector<double> stepwise_logdets;  // cumulative log det after each pick
  std::vector<double> gains;             // squared pivots d^2 of each pick
  bool rank_exhausted = false;

  double logdet() const {
    return stepwise_logdets.empty() ? 0.0 : stepwise_logdets.back();
  }
};

/// Kernel access backed by an explicit symmetric PSD matrix L.
class GramKernel {
 public:
  explicit GramKernel(const Matrix& l) : l_(l) {}
  Index size() const { return l_.rows(); }
  Vector diagonal() const { return l_.diagonal(); }
  Vector column(Index j) const { return l_.col(j); }

 private:
  const Matrix& l_;
};

/// Kernel access backed by features Z with L = Z Z^T never formed.
class FeatureKernel {
 public:
  explicit FeatureKernel(const Matrix& z) : z_(z) {}
  Index size() const { return z_.rows(); }
  Vector diagonal() const { return z_.rowwise().squaredNorm(); }
  Vector column(Index j) const { return z_ * z_.row(j).transpose(); }

 private:
  const Matrix& z_;
};

/// Incremental Cholesky workspace for greedy MAP inference.
///
/// After t updates, chol_ holds the partial factor rows c_i (one per
/// candidate) and gains_(i) = L_ii - |c_i|^2 is the squared pivot item i would
/// contribute next. Items that were selected or conditioned on are marked
/// consumed and report a -inf gain.
template <typename Kernel>
class SelectionState {
 public:
  SelectionState(Kernel kernel, Index capacity)
      : kernel_(std::move(kernel)),
        gains_(kernel_.diagonal()),
        chol_(kernel_.size(), std::max<Index>(capacity, 0)),
        consumed_(static_cast<std::size_t>(kernel_.size()), false),
        blocked_(static_cast<std::size_t>(kernel_.size()), false) {
    const double max_diag = gains_.size() == 0 ? 0.0 : gains_.maxCoeff();
    threshold_ = kGainTol * std::max(max_diag, 0.0);
  }

  Index size() const { return kernel_.size(); }
  double threshold() const { return threshold_; }
  const IndexList& chosen() const { return chosen_; }
  Index rank() const { return steps_; }

  double gain(Index i) const {
    return consumed_[static_cast<std::size_t>(i)] ? -std::numeric_limits<double>::infinity() : gains_(i);
  }

  /// Keeps item i out of future candidate searches without conditioning on it.
  void exclude(Index i) { blocked_[static_cast<std::size_t>(i)] = true; }

  /// Folds item i into the factor without reporting it as a pick. Returns
  /// false when i is already spanned by the conditioned set.
  bool condition_on(Index i) {
    consumed_[static_cast<std::size_t>(i)] = true;
    if (!(gains_(i) > threshold_)) return false;
    update(i);
    return true;
  }

  /// Best unconsumed, unexcluded candidate; ties go to the lowest index.
  std::optional<Index> best_candidate() const {
    std::optional<Index> best;
    double best_gain = threshold_;
    for (Index i = 0; i < gains_.size(); ++i) {
      const auto u = static_cast<std::size_t>(i);
      if (consumed_[u] || blocked_[u]) continue;
      if (gains_(i) > best_gain) {
        best_gain = gains_(i);
        best = i;
      }
    }
    return best;
  }

  /// Selects item i and returns its squared pivot.
  double select(Index i) {
    const double d2 = gains_(i);
    consumed_[static_cast<std::size_t>(i)] = true;
    update(i);
    chosen_.push_back(i);
    return d2;
  }

 private:
  void update(Index j) {
    if (steps_ == chol_.cols()) chol_.conservativeResize(Eigen::NoChange, std::max<Index>(1, 2 * steps_));
    const double dj = std::sqrt(gains_(j));
    Vector e = kernel_.column(j);
    if (steps_ > 0) e.noalias() -= chol_.leftCols(steps_) * chol_.row(j).head(steps_).transpose();
    e /= dj;
    chol_.col(steps_) = e;
    gains_.array() -= e.array().square();
    ++steps_;
  }

  Kernel kernel_;
  Vector gains_;
  Matrix chol_;
  std::vector<bool> consumed_;
  std::vector<bool> blocked_;
  IndexList chosen_;
  Index steps_ = 0;
  double threshold_ = 0.0;
};

template <typename Kernel>
MapResult greedy_map_with(Kernel kernel, Index k, const IndexList& preselected, const IndexList& excluded) {
  const Index n = kernel.size();
  auto check = [n](Index i, const char* what) {
    if (i < 0 || i >= n) throw Error(ErrorKind::invalid_input, std::string("greedy_map: ") + what + " index out of range");
  };
  std::vector<bool> excluded_mask(static_cast<std::size_t>(n), false);
  for (Index i : excluded) {
    check(i, "excluded");
    excluded_mask[static_cast<std::size_t>(i)] = true;
  }
  for (Index i : preselected) {
    check(i, "preselected");
    if (excluded_mask[static_cast<std::size_t>(i)])
      throw Error(ErrorKind::invalid_input, "greedy_map: preselected and excluded sets overlap");
  }
  if (k < 0) throw Error(ErrorKind::invalid_input, "greedy_map: negative k");

  SelectionState<Kernel> state(std::move(kernel), k + static_cast<Index>(preselected.size()));
  for (Index i : excluded) state.exclude(i);
  for (Index i : preselected) state.condition_on(i);

  MapResult out;
  double total = 0.0;
  while (static_cast<Index>(out.indices.size()) < k) {
    const auto next = state.best_candidate();
    if (!next) {
      out.rank_exhausted = true;
      break;
    }
    const double d2 = state.select(*next);
    total += std::log(d2);
    out.indices.push_back(*next);
    out.gains.push_back(d2);
    out.stepwise_logdets.push_back(total);
  }
  return out;
}

/// Greedy MAP for a k-DPP with kernel L, conditioned on `preselected` (seeded
/// into the factor, never reported) and never picking `excluded`.
MapResult greedy_map(const Matrix& l, Index k, const IndexList& preselected = {}, const IndexList& excluded = {});

/// Same as greedy_map on L = Z Z^T, computing kernel columns on demand.
MapResult greedy_map_features(const Matrix& z, Index k, const IndexList& preselected = {},
                              const IndexList& excluded = {});

/// Largest number of k-subsets brute_force_map will enumerate.
inline constexpr double kBruteForceLimit = 1e6;

/// Exact MAP by enumerating all k-subsets; indices returned ascending.
MapResult brute_force_map(const Matrix& l, Index k);

struct SubsetLogdet {
  double value = 0.0;
  bool singular = false;
};

/// log det(Z_A Z_A^T). Singular submatrices report -inf with singular = true.
SubsetLogdet subset_logdet(const Matrix& z, const IndexList& a);

}  // namespace ddpp
