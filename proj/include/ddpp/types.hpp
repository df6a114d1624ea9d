#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ddpp {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// All numerics run in double; float input is widened at ingestion.
using Matrix = MatrixX<double>;
using Vector = VectorX<double>;
using Index = Eigen::Index;
using IndexList = std::vector<Index>;

// Rows of a feature matrix are samples, columns are feature dimensions.
using FeatureMatrix = Matrix;

// Default relative threshold below which singular/eigen values count as zero.
inline constexpr double kRankTol = 1e-10;

enum class ErrorKind {
  invalid_input,
  not_positive_definite,
  not_psd,
  too_large,
  decode,
  budget_violation,
  scaling_violation,
  config,
  ingest,
  degenerate_input,
  rank_infeasible,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class NotPositiveDefinite : public Error {
 public:
  NotPositiveDefinite(Index pivot, const std::string& what)
      : Error(ErrorKind::not_positive_definite, what), pivot_(pivot) {}
  Index pivot() const noexcept { return pivot_; }

 private:
  Index pivot_;
};

class DecodeError : public Error {
 public:
  DecodeError(std::size_t offset, const std::string& what)
      : Error(ErrorKind::decode, what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class BudgetViolation : public Error {
 public:
  BudgetViolation(std::uint32_t source, std::uint32_t interval, const std::string& what)
      : Error(ErrorKind::budget_violation, what + " (source " + std::to_string(source) +
                                               ", interval " + std::to_string(interval) + ")"),
        source_(source),
        interval_(interval) {}
  std::uint32_t source() const noexcept { return source_; }
  std::uint32_t interval() const noexcept { return interval_; }

 private:
  std::uint32_t source_;
  std::uint32_t interval_;
};

class IngestError : public Error {
 public:
  IngestError(std::size_t row, const std::string& what)
      : Error(ErrorKind::ingest, what + " (row " + std::to_string(row) + ")"), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

}  // namespace ddpp
