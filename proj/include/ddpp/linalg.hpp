#pragma once

#include <array>

#include "ddpp/types.hpp"

namespace ddpp {

/// Eigendecomposition of a symmetric matrix, eigenvalues in descending order.
struct SpectralDecomp {
  Vector eigenvalues;
  Matrix eigenvectors;  // column j pairs with eigenvalues(j)
};

/// Jitter steps tried in order by logdet_psd, relative to max(1, max diagonal).
inline constexpr std::array<double, 4> kJitterLadder{0.0, 1e-12, 1e-10, 1e-8};

/// L = Z Z^T for a feature matrix Z, exactly symmetric.
template <typename Derived>
Matrix gram(const Eigen::MatrixBase<Derived>& z) {
  if (z.rows() == 0) throw Error(ErrorKind::invalid_input, "gram: empty feature matrix");
  if (!z.allFinite()) throw Error(ErrorKind::invalid_input, "gram: non-finite entry");
  const Index n = z.rows();
  const Matrix zd = z.template cast<double>();
  Matrix l = Matrix::Zero(n, n);
  l.template selfadjointView<Eigen::Lower>().rankUpdate(zd);
  return Matrix(l.template selfadjointView<Eigen::Lower>());
}

template <typename Derived>
double max_abs(const Eigen::MatrixBase<Derived>& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

template <typename Derived>
double asymmetry(const Eigen::MatrixBase<Derived>& m) {
  return m.size() == 0 ? 0.0 : (m - m.transpose()).cwiseAbs().maxCoeff();
}

/// True when max|M - M^T| <= tol * max(1, max|M|).
bool is_symmetric(const Matrix& m, double tol = 1e-9);

/// log det(M + jitter I) via Cholesky, escalating through kJitterLadder.
/// Throws NotPositiveDefinite naming the failing pivot of the last attempt.
double logdet_psd(const Matrix& m, double jitter = 0.0);

/// Cholesky without any jitter; returns false (and the failing pivot) instead of throwing.
/// A pivot counts as failed when it is <= pivot_floor.
bool try_cholesky_logdet(const Matrix& m, double pivot_floor, double& logdet, Index& failed_pivot);

SpectralDecomp spectral_decomp(const Matrix& m);

/// Symmetric square root V diag(sqrt(max(lambda, 0))) V^T. Eigenvalues below
/// -1e-6 * max(1, max|M|) are rejected as not PSD.
Matrix psd_sqrt(const Matrix& m);

/// Rows of the result form an orthonormal basis of rowspace(Z); singular
/// values <= tol * sigma_max are treated as zero.
Matrix orthonormal_row_basis(const Matrix& z, double tol = kRankTol);

/// Numerical rank with the same threshold convention as orthonormal_row_basis.
Index numerical_rank(const Matrix& z, double tol = kRankTol);

/// Rows (and, for square matrices, columns) of m restricted to idx.
Matrix select_rows(const Matrix& m, const IndexList& idx);
Matrix principal_submatrix(const Matrix& m, const IndexList& idx);

}  // namespace ddpp
