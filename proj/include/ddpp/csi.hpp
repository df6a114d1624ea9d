#pragma once

#include <cstdint>
#include <random>

#include "ddpp/linalg.hpp"

namespace ddpp {

/// Orthogonal projector onto the complement of the rowspace of the samples
/// the center has already received from other sources.
struct Projector {
  Matrix matrix;
  Index rank = 0;
};

/// Compressed feedback message: a principal block of H on a dimension subset
/// plus a truncated spectral expansion of what that block leaves out.
struct CsiPacket {
  Index dims = 0;
  IndexList selected_dims;              // strictly increasing, all < dims
  std::vector<double> principal_block;  // lower triangle of H restricted to selected_dims, row by row
  Index residual_rank = 0;
  std::vector<double> residual_values;   // descending, non-negative
  std::vector<double> residual_vectors;  // residual_rank x dims, row-major
  std::int64_t element_count = 0;

  Index r0() const { return static_cast<Index>(selected_dims.size()); }

  /// Throws Error(decode) when the fields disagree with each other.
  void validate() const;
};

inline constexpr std::int64_t triangular(std::int64_t r) { return (r * r + r) / 2; }

/// H = I - Q^T Q where Q is an orthonormal basis of rowspace(z_y).
Projector compute_projector(const Matrix& z_y, Index m);

struct BudgetSplit {
  Index r0 = 0;
  Index r1 = 0;
};

/// Splits a budget of R*m elements between a principal block of size r0 and
/// r1 spectral terms of length m.
BudgetSplit split_budget(double sparsity, Index m, double block_fraction);

/// Dimensions picked by greedy MAP on H, returned ascending.
IndexList select_dims(const Matrix& h, Index r0);

/// Proposed compression. When the budget covers the whole lower triangle the
/// exact projector is sent.
CsiPacket compress(const Projector& h, double sparsity, double block_fraction);

/// Top floor(R) spectral terms of H, no principal block.
CsiPacket compress_svd(const Projector& h, double sparsity);

/// Principal block on uniformly drawn dimensions, sized with block_fraction = 1.
CsiPacket compress_random_sketch(const Projector& h, double sparsity, std::mt19937_64& rng);

/// Whole lower triangle of H; (m^2 + m) / 2 elements.
CsiPacket exact_packet(const Projector& h);

/// Packet whose block sits on `dims` and whose spectral part is the top
/// `r1` positive eigenpairs of H minus the embedded block.
CsiPacket make_packet(const Matrix& h, const IndexList& dims, Index r1);

Matrix reconstruct(const CsiPacket& packet);

/// Places block at rows/cols idx of an m x m zero matrix.
Matrix embed(const Matrix& block, const IndexList& idx, Index m);

/// W = I + sqrt(H_hat) with momentum, sqrt(H_hat) without.
Matrix precoder(const Matrix& h_hat, bool momentum);

/// Z W with W from precoder().
Matrix precode(const Matrix& z, const Matrix& h_hat, bool momentum);

}  // namespace ddpp
