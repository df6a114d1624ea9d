#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ddpp/protocol.hpp"

namespace ddpp {

struct Dataset {
  FeatureMatrix features;
  std::vector<std::int64_t> labels;  // empty when unlabeled

  bool has_labels() const { return !labels.empty(); }
  Index size() const { return features.rows(); }
  Index dims() const { return features.cols(); }
};

enum class FeatureFormat { csv, ddpm };

/// csv: optional header row, one sample per row; with label_column the last
/// field is an integer label. ddpm: see encode_ddpm.
Dataset load_features(const std::string& path, FeatureFormat format, bool label_column = false);
Dataset parse_csv(const std::string& text, bool label_column = false);

// "DDPM", u16 version, u64 n, u64 m, u8 has_labels, n*m f64 row-major, n x i64 labels.
Bytes encode_ddpm(const Dataset& d);
Dataset decode_ddpm(std::span<const std::uint8_t> bytes);
void save_ddpm(const std::string& path, const Dataset& d);
void save_csv(const std::string& path, const Dataset& d);

enum class MixtureLayout {
  isotropic,  // dense means on the sphere, isotropic noise
  block,      // each cluster lives on its own block of coordinates
};

struct MixtureSpec {
  std::uint64_t seed = 0;
  Index n = 0;
  Index m = 0;
  Index n_clusters = 1;
  double spread = 1.0;
  double scale = 1.0;
  MixtureLayout layout = MixtureLayout::isotropic;
  double background = 0.0;  // block layout: isotropic noise relative to the in-block noise
};

/// Gaussian mixture with cluster means of norm `scale`. Samples are
/// mean + scale * spread * noise, where noise has unit expected norm.
Dataset synth_gaussian_mixture(const MixtureSpec& spec);

enum class PartitionPolicy { uniform_random, cluster_skewed };

struct SourcePartition {
  std::vector<IndexList> sources;

  Index n_sources() const { return static_cast<Index>(sources.size()); }
  /// Throws Error(invalid_input) unless lists are disjoint and within [0, n).
  void validate(Index n) const;
};

/// uniform_random: shuffled equal split. cluster_skewed: equal split where
/// source i draws from cluster (i mod n_clusters) with probability 1 - skew
/// and from the shuffled remainder otherwise; requires labels.
SourcePartition partition(Index n, Index n_sources, PartitionPolicy policy, std::uint64_t seed,
                          const std::vector<std::int64_t>& labels = {}, double skew = 0.3);

std::string partition_to_json(const SourcePartition& p);
SourcePartition partition_from_json(const std::string& text);

/// Global feature scale c making a pilot greedy log det on three random
/// probes exceed 1; 1.0 when the data already satisfies it.
double positivity_scale(const Matrix& z, Index k);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::span<const std::uint8_t> bytes);
void write_text(const std::string& path, const std::string& text);

}  // namespace ddpp
