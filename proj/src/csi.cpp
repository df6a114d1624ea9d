#include "ddpp/csi.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "ddpp/dpp.hpp"

namespace ddpp {

namespace {

// Eigenvalues at or below this fraction of the residual scale are numerical zeros.
constexpr double kSpectralFloor = 1e-12;

void fail(const std::string& what) { throw Error(ErrorKind::decode, "csi packet: " + what); }

}  // namespace

void CsiPacket::validate() const {
  if (dims < 0) fail("negative dimension");
  const std::int64_t r0v = r0();
  for (std::size_t i = 0; i < selected_dims.size(); ++i) {
    if (selected_dims[i] < 0 || selected_dims[i] >= dims) fail("selected dimension out of range");
    if (i > 0 && selected_dims[i] <= selected_dims[i - 1]) fail("selected dimensions not strictly increasing");
  }
  if (static_cast<std::int64_t>(principal_block.size()) != triangular(r0v)) fail("principal block size mismatch");
  if (residual_rank < 0 || residual_rank > dims) fail("residual rank out of range");
  if (static_cast<Index>(residual_values.size()) != residual_rank) fail("residual value count mismatch");
  if (static_cast<Index>(residual_vectors.size()) != residual_rank * dims) fail("residual vector count mismatch");
  if (element_count != triangular(r0v) + static_cast<std::int64_t>(residual_rank) * dims)
    fail("element count mismatch");
}

Projector compute_projector(const Matrix& z_y, Index m) {
  if (z_y.rows() > 0 && z_y.cols() != m) throw Error(ErrorKind::invalid_input, "compute_projector: column count differs from m");
  Projector out;
  out.matrix = Matrix::Identity(m, m);
  out.rank = m;
  if (z_y.rows() == 0) return out;
  const Matrix q = orthonormal_row_basis(z_y);
  out.matrix.noalias() -= q.transpose() * q;
  out.matrix = 0.5 * (out.matrix + out.matrix.transpose()).eval();
  out.rank = m - q.rows();
  return out;
}

BudgetSplit split_budget(double sparsity, Index m, double block_fraction) {
  const double budget = sparsity * static_cast<double>(m);
  if (!(budget >= 1.0)) throw Error(ErrorKind::invalid_input, "split_budget: R*m must be at least 1");
  if (!(block_fraction >= 0.0 && block_fraction <= 1.0))
    throw Error(ErrorKind::invalid_input, "split_budget: block_fraction outside [0, 1]");
  BudgetSplit out;
  const double block_budget = block_fraction * budget;
  while (out.r0 < m && static_cast<double>(triangular(out.r0 + 1)) <= block_budget) ++out.r0;
  const double left = budget - static_cast<double>(triangular(out.r0));
  out.r1 = std::clamp<Index>(static_cast<Index>(std::floor(left / static_cast<double>(m))), 0, m);
  return out;
}

IndexList select_dims(const Matrix& h, Index r0) {
  if (r0 < 0 || r0 > h.rows()) throw Error(ErrorKind::invalid_input, "select_dims: r0 out of range");
  IndexList dims = greedy_map(h, r0).indices;
  std::sort(dims.begin(), dims.end());
  return dims;
}

Matrix embed(const Matrix& block, const IndexList& idx, Index m) {
  Matrix out = Matrix::Zero(m, m);
  const Index k = static_cast<Index>(idx.size());
  for (Index i = 0; i < k; ++i)
    for (Index j = 0; j < k; ++j) out(idx[i], idx[j]) = block(i, j);
  return out;
}

CsiPacket make_packet(const Matrix& h, const IndexList& dims, Index r1) {
  const Index m = h.rows();
  CsiPacket p;
  p.dims = m;
  p.selected_dims = dims;
  const Matrix block = principal_submatrix(h, dims);
  const Index r0 = static_cast<Index>(dims.size());
  p.principal_block.reserve(static_cast<std::size_t>(triangular(r0)));
  for (Index i = 0; i < r0; ++i)
    for (Index j = 0; j <= i; ++j) p.principal_block.push_back(block(i, j));

  if (r1 > 0) {
    Matrix residual = h - embed(block, dims, m);
    residual = 0.5 * (residual + residual.transpose()).eval();
    const SpectralDecomp sd = spectral_decomp(residual);
    const double floor = kSpectralFloor * std::max(1.0, max_abs(residual));
    for (Index j = 0; j < std::min(r1, m); ++j) {
      if (!(sd.eigenvalues(j) > floor)) break;
      p.residual_values.push_back(sd.eigenvalues(j));
      for (Index c = 0; c < m; ++c) p.residual_vectors.push_back(sd.eigenvectors(c, j));
    }
    p.residual_rank = static_cast<Index>(p.residual_values.size());
  }
  p.element_count = triangular(r0) + static_cast<std::int64_t>(p.residual_rank) * m;
  return p;
}

CsiPacket exact_packet(const Projector& h) {
  IndexList all(static_cast<std::size_t>(h.matrix.rows()));
  std::iota(all.begin(), all.end(), Index{0});
  return make_packet(h.matrix, all, 0);
}

CsiPacket compress(const Projector& h, double sparsity, double block_fraction) {
  const Index m = h.matrix.rows();
  if (static_cast<double>(triangular(m)) <= sparsity * static_cast<double>(m)) return exact_packet(h);
  const BudgetSplit split = split_budget(sparsity, m, block_fraction);
  return make_packet(h.matrix, select_dims(h.matrix, split.r0), split.r1);
}

CsiPacket compress_svd(const Projector& h, double sparsity) {
  const Index m = h.matrix.rows();
  const Index r1 = std::clamp<Index>(static_cast<Index>(std::floor(sparsity)), 0, m);
  return make_packet(h.matrix, {}, r1);
}

CsiPacket compress_random_sketch(const Projector& h, double sparsity, std::mt19937_64& rng) {
  const Index m = h.matrix.rows();
  const Index r0 = split_budget(sparsity, m, 1.0).r0;
  IndexList pool(static_cast<std::size_t>(m));
  std::iota(pool.begin(), pool.end(), Index{0});
  for (Index i = 0; i < r0; ++i) {
    std::uniform_int_distribution<Index> pick(i, m - 1);
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick(rng))]);
  }
  IndexList dims(pool.begin(), pool.begin() + r0);
  std::sort(dims.begin(), dims.end());
  return make_packet(h.matrix, dims, 0);
}

Matrix reconstruct(const CsiPacket& packet) {
  packet.validate();
  const Index m = packet.dims;
  const Index r0 = packet.r0();
  Matrix out = Matrix::Zero(m, m);
  std::size_t pos = 0;
  for (Index i = 0; i < r0; ++i) {
    for (Index j = 0; j <= i; ++j) {
      const double v = packet.principal_block[pos++];
      out(packet.selected_dims[i], packet.selected_dims[j]) = v;
      out(packet.selected_dims[j], packet.selected_dims[i]) = v;
    }
  }
  if (packet.residual_rank > 0) {
    const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> v(
        packet.residual_vectors.data(), packet.residual_rank, m);
    const Eigen::Map<const Vector> lambda(packet.residual_values.data(), packet.residual_rank);
    Matrix low_rank = v.transpose() * lambda.asDiagonal() * v;
    out += 0.5 * (low_rank + low_rank.transpose());
  }
  return out;
}

Matrix precoder(const Matrix& h_hat, bool momentum) {
  Matrix w = psd_sqrt(h_hat);
  if (momentum) w.diagonal().array() += 1.0;
  return w;
}

Matrix precode(const Matrix& z, const Matrix& h_hat, bool momentum) {
  if (z.cols() != h_hat.rows()) throw Error(ErrorKind::invalid_input, "precode: dimension mismatch");
  return z * precoder(h_hat, momentum);
}

}  // namespace ddpp
