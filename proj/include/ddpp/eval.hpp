#pragma once

#include <cstdint>
#include <vector>

#include "ddpp/types.hpp"

namespace ddpp {

struct RdeReport {
  double gt_logdet = 0.0;
  double sel_logdet = 0.0;
  double rde = 0.0;
};

/// clamp(1 - sel/gt, 0, 1) with sel = log det(Z_sel Z_sel^T), gt likewise.
/// A singular selection scores 1. Throws Error(scaling_violation) if gt <= 0.
RdeReport rde(const Matrix& z, const IndexList& gt_indices, const IndexList& sel_indices);
RdeReport rde_from_logdets(double gt_logdet, double sel_logdet);

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
  double df = 0.0;
};

/// Two-sided Welch t-test of mean(xs) - mean(ys).
TTestResult welch_ttest(const std::vector<double>& xs, const std::vector<double>& ys);

struct KnnScore {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
};

/// Euclidean k-nearest-neighbor vote. Vote ties go to the tied class whose
/// member is nearest; distance ties go to the lower train index.
std::vector<std::int64_t> knn_predict(const Matrix& train_z, const std::vector<std::int64_t>& train_labels,
                                      const Matrix& test_z, Index k_neighbors);
KnnScore knn_eval(const Matrix& train_z, const std::vector<std::int64_t>& train_labels, const Matrix& test_z,
                  const std::vector<std::int64_t>& test_labels, Index k_neighbors);

/// Macro-averaged F1 over the union of true and predicted labels.
double macro_f1(const std::vector<std::int64_t>& truth, const std::vector<std::int64_t>& predicted);

/// Projection of the column-centered data onto the top two principal axes.
/// Each axis is signed so its largest-magnitude loading is positive.
Matrix pca2d(const Matrix& z);

struct Summary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 when n < 2
  std::size_t n = 0;
};

Summary summarize(const std::vector<double>& xs);

}  // namespace ddpp
