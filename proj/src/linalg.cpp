#include "ddpp/linalg.hpp"

#include <cmath>
#include <string>

namespace ddpp {

namespace {

void require_finite(const Matrix& m, const char* who) {
  if (!m.allFinite()) throw Error(ErrorKind::invalid_input, std::string(who) + ": non-finite entry");
}

void require_square(const Matrix& m, const char* who) {
  if (m.rows() != m.cols()) throw Error(ErrorKind::invalid_input, std::string(who) + ": matrix is not square");
}

// Plain right-looking Cholesky; only used to locate the failing pivot.
Index first_failing_pivot(const Matrix& a, double pivot_floor) {
  const Index n = a.rows();
  Matrix l = Matrix::Zero(n, n);
  for (Index j = 0; j < n; ++j) {
    double d = a(j, j) - l.row(j).head(j).squaredNorm();
    if (!(d > pivot_floor)) return j;
    d = std::sqrt(d);
    l(j, j) = d;
    for (Index i = j + 1; i < n; ++i) l(i, j) = (a(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / d;
  }
  return -1;
}

}  // namespace

bool is_symmetric(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  return asymmetry(m) <= tol * std::max(1.0, max_abs(m));
}

bool try_cholesky_logdet(const Matrix& m, double pivot_floor, double& logdet, Index& failed_pivot) {
  require_square(m, "cholesky");
  const Index n = m.rows();
  if (n == 0) {
    logdet = 0.0;
    failed_pivot = -1;
    return true;
  }
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() == Eigen::Success) {
    const auto diag = llt.matrixLLT().diagonal();
    if ((diag.array() * diag.array() > pivot_floor).all()) {
      logdet = 2.0 * diag.array().log().sum();
      failed_pivot = -1;
      return true;
    }
  }
  failed_pivot = first_failing_pivot(m, pivot_floor);
  if (failed_pivot < 0) failed_pivot = n - 1;
  return false;
}

double logdet_psd(const Matrix& m, double jitter) {
  require_square(m, "logdet_psd");
  require_finite(m, "logdet_psd");
  if (jitter < 0.0) throw Error(ErrorKind::invalid_input, "logdet_psd: negative jitter");
  if (!is_symmetric(m)) throw Error(ErrorKind::invalid_input, "logdet_psd: matrix is not symmetric");
  const Index n = m.rows();
  const double scale = n == 0 ? 1.0 : std::max(1.0, m.diagonal().cwiseAbs().maxCoeff());
  Index pivot = -1;
  for (double step : kJitterLadder) {
    Matrix shifted = m;
    shifted.diagonal().array() += jitter + step * scale;
    double value = 0.0;
    if (try_cholesky_logdet(shifted, 0.0, value, pivot)) return value;
  }
  throw NotPositiveDefinite(pivot, "logdet_psd: Cholesky failed at pivot " + std::to_string(pivot));
}

SpectralDecomp spectral_decomp(const Matrix& m) {
  require_square(m, "spectral_decomp");
  require_finite(m, "spectral_decomp");
  if (!is_symmetric(m)) throw Error(ErrorKind::invalid_input, "spectral_decomp: matrix is not symmetric");
  SpectralDecomp out;
  if (m.rows() == 0) {
    out.eigenvalues.resize(0);
    out.eigenvectors.resize(0, 0);
    return out;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success)
    throw Error(ErrorKind::invalid_input, "spectral_decomp: eigen solver did not converge");
  // Eigen returns ascending order.
  out.eigenvalues = solver.eigenvalues().reverse();
  out.eigenvectors = solver.eigenvectors().rowwise().reverse();
  return out;
}

Matrix psd_sqrt(const Matrix& m) {
  const SpectralDecomp sd = spectral_decomp(m);
  const Index n = m.rows();
  if (n == 0) return Matrix(0, 0);
  const double floor = -1e-6 * std::max(1.0, max_abs(m));
  if (sd.eigenvalues(n - 1) < floor)
    throw Error(ErrorKind::not_psd, "psd_sqrt: eigenvalue " + std::to_string(sd.eigenvalues(n - 1)) +
                                        " below tolerance");
  const Vector roots = sd.eigenvalues.cwiseMax(0.0).cwiseSqrt();
  Matrix out = sd.eigenvectors * roots.asDiagonal() * sd.eigenvectors.transpose();
  return 0.5 * (out + out.transpose());
}

Matrix orthonormal_row_basis(const Matrix& z, double tol) {
  if (tol <= 0.0) throw Error(ErrorKind::invalid_input, "orthonormal_row_basis: tol must be positive");
  if (z.rows() == 0 || z.cols() == 0) return Matrix(0, z.cols());
  require_finite(z, "orthonormal_row_basis");
  Eigen::BDCSVD<Matrix> svd(z, Eigen::ComputeThinV);
  const Vector& sigma = svd.singularValues();
  if (sigma.size() == 0 || sigma(0) <= 0.0) return Matrix(0, z.cols());
  Index r = 0;
  while (r < sigma.size() && sigma(r) > tol * sigma(0)) ++r;
  return svd.matrixV().leftCols(r).transpose();
}

Index numerical_rank(const Matrix& z, double tol) { return orthonormal_row_basis(z, tol).rows(); }

Matrix select_rows(const Matrix& m, const IndexList& idx) {
  Matrix out(static_cast<Index>(idx.size()), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Index>(i)) = m.row(idx[i]);
  return out;
}

Matrix principal_submatrix(const Matrix& m, const IndexList& idx) {
  const Index k = static_cast<Index>(idx.size());
  Matrix out(k, k);
  for (Index i = 0; i < k; ++i)
    for (Index j = 0; j < k; ++j) out(i, j) = m(idx[i], idx[j]);
  return out;
}

}  // namespace ddpp
