#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ddpp/data.hpp"
#include "ddpp/dpp.hpp"
#include "ddpp/transport.hpp"

namespace ddpp {

enum class Strategy { ddpp, greedi, greedymax, maxdiv, random, stratified, ground_truth };
enum class Compression { proposed, svd, random_sketch, none };

std::string to_string(Strategy s);
std::string to_string(Compression c);
std::string to_string(TransportKind t);
Strategy parse_strategy(const std::string& s);
Compression parse_compression(const std::string& s);
TransportKind parse_transport(const std::string& s);

struct ExperimentConfig {
  Index total_select = 120;  // k_T
  Index intervals = 2;       // t_T
  double sparsity = 45.0;    // R
  double epsilon = 1e-6;
  double block_fraction = 0.5;
  Strategy strategy = Strategy::ddpp;
  Compression compression = Compression::proposed;
  std::uint64_t seed = 0;
  bool momentum = true;
  TransportKind transport = TransportKind::loopback;
  bool parallel_sources = false;  // tcp always runs one thread per source

  /// Checks the config against an n x m dataset split by `parts`; throws
  /// Error(config) or Error(rank_infeasible).
  void validate(Index n, Index m, const SourcePartition& parts) const;

  /// Downlink elements allowed per source and interval.
  double downlink_cap(Index m) const;
};

struct LedgerSnapshot {
  std::int64_t uplink_elements = 0;
  std::int64_t downlink_elements = 0;
  std::int64_t probe_elements = 0;
  std::int64_t uplink_bytes = 0;
  std::int64_t downlink_bytes = 0;
  std::int64_t max_interval_downlink = 0;
  std::vector<std::int64_t> packet_elements;  // every feedback packet sent, in order
};

struct ExperimentResult {
  Strategy strategy = Strategy::ddpp;
  Compression compression = Compression::proposed;
  std::uint64_t seed = 0;
  IndexList selected;  // global indices in arrival order
  double diversity = 0.0;
  bool singular = false;
  bool rank_exhausted = false;
  std::optional<double> rde;
  std::optional<double> gt_logdet;
  std::vector<double> interval_seconds;
  LedgerSnapshot ledger;
};

/// Centralized greedy MAP over every sample assigned to a source; indices
/// are global.
MapResult run_ground_truth(const Matrix& z, const SourcePartition& parts, Index k_total);

/// Distributed selection with projector feedback over the configured transport.
ExperimentResult run_ddpp(const ExperimentConfig& cfg, const Matrix& z, const SourcePartition& parts);

/// greedi, greedymax, maxdiv, random, stratified or ground_truth.
ExperimentResult run_baseline(const ExperimentConfig& cfg, const Matrix& z, const SourcePartition& parts);

/// run_ddpp with compression svd or random_sketch.
ExperimentResult run_compression_variant(const ExperimentConfig& cfg, const Matrix& z, const SourcePartition& parts);

/// Dispatches on cfg.strategy and fills rde when `gt` is given.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const Matrix& z, const SourcePartition& parts,
                                const MapResult* gt = nullptr);

/// log det(I + m/(n eps) Z^T Z) for an n x m block.
double rate_distortion_diversity(const Matrix& z, double epsilon);

}  // namespace ddpp
