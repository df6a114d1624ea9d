#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ddpp/engine.hpp"

namespace ddpp {

inline constexpr const char* kToolVersion = "ddpp 1.0.0";

/// Flat key=value settings. Blank lines and lines starting with '#' are
/// ignored; later keys win.
using ConfigMap = std::map<std::string, std::string>;

ConfigMap parse_config(const std::string& text);
std::string format_config(const ConfigMap& cfg);

/// Built-in defaults for every campaign key.
ConfigMap default_campaign_config();

/// One selection method of a campaign: a baseline, or ddpp with a given
/// compression. Labels are "greedi", "ddpp", "ddpp-svd", ...
struct Method {
  Strategy strategy = Strategy::ddpp;
  Compression compression = Compression::proposed;
  std::string label() const;
};

Method parse_method(const std::string& label);

struct CampaignSpec {
  ExperimentConfig base;
  std::vector<Method> methods;
  std::vector<std::uint64_t> seeds;
  std::vector<Index> source_counts;  // N sweep
  std::vector<double> sparsities;    // R sweep, resolved
  std::string out_dir;

  std::string data;  // "synthetic" or a dataset path
  FeatureFormat format = FeatureFormat::ddpm;
  bool csv_labels = false;
  std::string partition_file;  // optional fixed partition for file data
  PartitionPolicy policy = PartitionPolicy::cluster_skewed;
  double skew = 0.1;
  MixtureSpec synth;          // n, seed filled per trial
  Index per_source = 500;     // synthetic n_i
  Index clusters_per_source = 1;  // synthetic clusters = this * N unless synth.clusters is set
  std::optional<double> fixed_scale;  // "scale" key; auto when absent

  ConfigMap resolved;  // every key after defaults and overrides

  /// Throws Error(config) on malformed or inconsistent keys.
  static CampaignSpec from_config(const ConfigMap& cfg);
};

/// Features, labels and partition for one (N, seed) point, already rescaled
/// by the positivity factor.
struct TrialData {
  Dataset dataset;
  SourcePartition parts;
  double scale = 1.0;
};

TrialData materialize(const CampaignSpec& spec, Index n_sources, std::uint64_t seed, const Dataset* loaded = nullptr);

std::string result_json(const ExperimentResult& r, const Method& method, const ExperimentConfig& cfg, Index n_sources,
                        Index m, double scale);

/// Runs every (N, seed) point through every method and R value, appending
/// one JSON line per trial to out_dir/results.jsonl and writing
/// out_dir/manifest.json and out_dir/gt/. Returns the number of lines.
std::size_t run_campaign(const CampaignSpec& spec, std::ostream& log);

/// Worker count from DDPP_THREADS, else the hardware concurrency.
unsigned worker_threads();

struct ReportOptions {
  std::string results_path;
  std::string out_dir;
  std::vector<std::pair<std::string, std::string>> pairs;  // welch t-test label pairs
  std::optional<std::uint64_t> pca_seed;
  std::string pca_label = "ddpp";
  std::optional<Index> pca_sources;
};

/// Writes summary.csv, table.csv, ttest.csv and optionally pca.csv; returns
/// the number of result lines read. Throws Error(config) on empty input.
std::size_t write_report(const ReportOptions& opts, std::ostream& log);

}  // namespace ddpp
