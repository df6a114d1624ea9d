// ddpp command-line front end.

#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ddpp/campaign.hpp"
#include "ddpp/eval.hpp"

namespace fs = std::filesystem;
using namespace ddpp;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

int exit_code(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::not_positive_definite:
    case ErrorKind::not_psd:
    case ErrorKind::budget_violation:
    case ErrorKind::scaling_violation:
    case ErrorKind::degenerate_input:
      return kExitNumeric;
    default:
      return kExitConfig;
  }
}

FeatureFormat format_for(const std::string& path, const std::string& format) {
  if (format == "csv") return FeatureFormat::csv;
  if (format == "ddpm") return FeatureFormat::ddpm;
  if (format != "auto") throw Error(ErrorKind::config, "format must be csv, ddpm or auto");
  return fs::path(path).extension() == ".csv" ? FeatureFormat::csv : FeatureFormat::ddpm;
}

PartitionPolicy policy_for(const std::string& s) {
  if (s == "uniform_random") return PartitionPolicy::uniform_random;
  if (s == "cluster_skewed") return PartitionPolicy::cluster_skewed;
  throw Error(ErrorKind::config, "policy must be uniform_random or cluster_skewed");
}

std::vector<double> parse_values(const std::string& s) {
  std::vector<double> out;
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    char* end = nullptr;
    const double v = std::strtod(item.c_str(), &end);
    if (item.empty() || *end != '\0') throw Error(ErrorKind::config, "not a number: '" + item + "'");
    out.push_back(v);
  }
  return out;
}

nlohmann::json map_json(const MapResult& r) {
  return {{"indices", r.indices},
          {"logdet", r.logdet()},
          {"stepwise_logdets", r.stepwise_logdets},
          {"rank_exhausted", r.rank_exhausted}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed DPP sample selection with projector feedback"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a synthetic Gaussian-mixture dataset and its partition");
  MixtureSpec ms;
  ms.n = 5000;
  ms.m = 64;
  ms.n_clusters = 20;
  ms.scale = 10.0;
  std::string gen_layout = "block", gen_policy = "uniform_random", gen_out = ".";
  Index gen_sources = 10;
  double gen_skew = 0.3;
  ms.background = 0.1;
  gen->add_option("--n", ms.n, "Number of samples")->capture_default_str();
  gen->add_option("--m", ms.m, "Feature dimension")->capture_default_str();
  gen->add_option("--clusters", ms.n_clusters, "Mixture components")->capture_default_str();
  gen->add_option("--sources", gen_sources, "Number of sources")->capture_default_str();
  gen->add_option("--seed", ms.seed, "Random seed")->capture_default_str();
  gen->add_option("--spread", ms.spread, "Noise scale relative to the mean norm")->capture_default_str();
  gen->add_option("--scale", ms.scale, "Norm of cluster means")->capture_default_str();
  gen->add_option("--layout", gen_layout, "block or isotropic")->capture_default_str();
  gen->add_option("--background", ms.background, "Block layout: isotropic noise share")->capture_default_str();
  gen->add_option("--policy", gen_policy, "uniform_random or cluster_skewed")->capture_default_str();
  gen->add_option("--skew", gen_skew, "cluster_skewed: share drawn off the home cluster")->capture_default_str();
  gen->add_option("--out", gen_out, "Output directory")->capture_default_str();

  // partition
  auto* part = app.add_subcommand("partition", "Split an existing dataset into sources");
  std::string part_data, part_format = "auto", part_policy = "uniform_random", part_out = "partition.json";
  bool part_labels = false;
  Index part_sources = 10;
  std::uint64_t part_seed = 0;
  double part_skew = 0.3;
  part->add_option("--data", part_data, "Feature file")->required();
  part->add_option("--format", part_format, "csv, ddpm or auto")->capture_default_str();
  part->add_flag("--labels", part_labels, "csv has a trailing label column");
  part->add_option("--sources", part_sources, "Number of sources")->capture_default_str();
  part->add_option("--policy", part_policy, "uniform_random or cluster_skewed")->capture_default_str();
  part->add_option("--seed", part_seed, "Random seed")->capture_default_str();
  part->add_option("--skew", part_skew, "cluster_skewed: share drawn off the home cluster")->capture_default_str();
  part->add_option("--out", part_out, "Output JSON path")->capture_default_str();

  // run
  auto* run = app.add_subcommand("run", "Run an experiment campaign and write JSON-lines results");
  std::string run_config;
  std::vector<std::string> run_sets;
  std::map<std::string, std::string> run_flags;
  run->add_option("--config", run_config, "key=value config file");
  run->add_option("--set", run_sets, "Override any config key (key=value), repeatable");
  const std::vector<std::pair<std::string, std::string>> shortcuts = {
      {"strategies", "Comma-separated methods, e.g. ddpp,greedi,ddpp-svd"},
      {"seeds", "Seed count or comma-separated seed list"},
      {"N", "Source counts, comma-separated"},
      {"kT", "Total samples to select"},
      {"tT", "Intervals"},
      {"R", "Tolerable sparsity values; suffix x means times kT/tT"},
      {"out", "Output directory"},
      {"data", "synthetic or a dataset path"},
      {"partition-file", "Fixed partition JSON for file data"},
      {"partition", "uniform_random or cluster_skewed"},
      {"transport", "loopback or tcp"},
      {"momentum", "true or false"},
      {"scale", "auto or a fixed feature scale"},
  };
  for (const auto& [flag, help] : shortcuts) run->add_option("--" + flag, run_flags[flag], help);

  // report
  auto* rep = app.add_subcommand("report", "Aggregate results into mean/std tables, t-tests and PCA coordinates");
  ReportOptions ropts;
  std::vector<std::string> rep_pairs;
  std::uint64_t rep_pca_seed = 0;
  Index rep_pca_n = 0;
  rep->add_option("--results", ropts.results_path, "results.jsonl")->required();
  rep->add_option("--out", ropts.out_dir, "Output directory (default: next to results)");
  rep->add_option("--pair", rep_pairs, "Method pair a:b for Welch t-tests, repeatable");
  auto* pca_opt = rep->add_option("--pca-seed", rep_pca_seed, "Seed whose selection is written to pca.csv");
  rep->add_option("--pca-label", ropts.pca_label, "Method for the PCA scatter")->capture_default_str();
  auto* pca_n_opt = rep->add_option("--pca-N", rep_pca_n, "Source count for the PCA scatter");

  // oracle
  auto* orc = app.add_subcommand("oracle", "Exact MAP by enumeration on a small input");
  std::string orc_data, orc_format = "auto", orc_kernel = "features";
  Index orc_k = 2;
  orc->add_option("--data", orc_data, "Feature rows, or a kernel matrix with --kernel gram")->required();
  orc->add_option("--format", orc_format, "csv, ddpm or auto")->capture_default_str();
  orc->add_option("--kernel", orc_kernel, "features (L = Z Z^T) or gram (file is L)")->capture_default_str();
  orc->add_option("--k", orc_k, "Subset size")->capture_default_str();

  // ttest
  auto* tt = app.add_subcommand("ttest", "Welch two-sample t-test");
  std::string tt_x, tt_y, tt_results, tt_a = "ddpp", tt_b = "greedi";
  Index tt_n = 0;
  tt->add_option("--x", tt_x, "Comma-separated sample");
  tt->add_option("--y", tt_y, "Comma-separated sample");
  tt->add_option("--results", tt_results, "results.jsonl to draw RDE samples from");
  tt->add_option("--a", tt_a, "First method label")->capture_default_str();
  tt->add_option("--b", tt_b, "Second method label")->capture_default_str();
  tt->add_option("--N", tt_n, "Restrict to this source count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*gen) {
      const Dataset d = synth_gaussian_mixture([&] {
        MixtureSpec s = ms;
        if (gen_layout == "block")
          s.layout = MixtureLayout::block;
        else if (gen_layout == "isotropic")
          s.layout = MixtureLayout::isotropic;
        else
          throw Error(ErrorKind::config, "layout must be block or isotropic");
        return s;
      }());
      const SourcePartition p = partition(d.size(), gen_sources, policy_for(gen_policy), ms.seed, d.labels, gen_skew);
      fs::create_directories(gen_out);
      const std::string features = (fs::path(gen_out) / "features.ddpm").string();
      const std::string parts = (fs::path(gen_out) / "partition.json").string();
      save_ddpm(features, d);
      write_text(parts, partition_to_json(p));
      std::cout << features << "\n" << parts << "\n";
    } else if (*part) {
      const Dataset d = load_features(part_data, format_for(part_data, part_format), part_labels);
      const SourcePartition p = partition(d.size(), part_sources, policy_for(part_policy), part_seed, d.labels, part_skew);
      write_text(part_out, partition_to_json(p));
      std::cout << part_out << "\n";
    } else if (*run) {
      ConfigMap overrides;
      if (!run_config.empty()) overrides = parse_config(read_file(run_config));
      for (const auto& [flag, value] : run_flags) {
        if (value.empty()) continue;
        overrides[flag == "partition-file" ? "partition_file" : flag] = value;
      }
      for (const auto& kv : run_sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw Error(ErrorKind::config, "--set expects key=value, got '" + kv + "'");
        overrides[kv.substr(0, eq)] = kv.substr(eq + 1);
      }
      const CampaignSpec spec = CampaignSpec::from_config(overrides);
      const std::size_t lines = run_campaign(spec, std::cerr);
      std::cout << lines << " results written to " << (fs::path(spec.out_dir) / "results.jsonl").string() << "\n";
    } else if (*rep) {
      if (ropts.out_dir.empty()) ropts.out_dir = fs::path(ropts.results_path).parent_path().string();
      if (ropts.out_dir.empty()) ropts.out_dir = ".";
      for (const auto& p : rep_pairs) {
        const auto colon = p.find(':');
        if (colon == std::string::npos) throw Error(ErrorKind::config, "--pair expects a:b, got '" + p + "'");
        ropts.pairs.emplace_back(p.substr(0, colon), p.substr(colon + 1));
      }
      if (pca_opt->count()) ropts.pca_seed = rep_pca_seed;
      if (pca_n_opt->count()) ropts.pca_sources = rep_pca_n;
      write_report(ropts, std::cout);
    } else if (*orc) {
      const Dataset d = load_features(orc_data, format_for(orc_data, orc_format));
      Matrix l;
      if (orc_kernel == "features")
        l = gram(d.features);
      else if (orc_kernel == "gram")
        l = d.features;
      else
        throw Error(ErrorKind::config, "kernel must be features or gram");
      nlohmann::json out;
      out["brute_force"] = map_json(brute_force_map(l, orc_k));
      out["greedy"] = map_json(greedy_map(l, orc_k));
      std::cout << out.dump() << "\n";
    } else if (*tt) {
      std::vector<double> xs, ys;
      if (!tt_results.empty()) {
        std::istringstream in(read_file(tt_results));
        std::string line;
        while (std::getline(in, line)) {
          if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
          const auto j = nlohmann::json::parse(line);
          if (j.at("rde").is_null()) continue;
          if (tt_n && j.at("N").get<Index>() != tt_n) continue;
          const std::string label = j.value("label", j.at("strategy").get<std::string>());
          if (label == tt_a) xs.push_back(j.at("rde").get<double>());
          if (label == tt_b) ys.push_back(j.at("rde").get<double>());
        }
      } else {
        xs = parse_values(tt_x);
        ys = parse_values(tt_y);
      }
      const TTestResult r = welch_ttest(xs, ys);
      std::cout << std::setprecision(10) << "t=" << r.t << " df=" << r.df << " p=" << r.p << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e);
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return 0;
}
