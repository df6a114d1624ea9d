#include "ddpp/campaign.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "ddpp/eval.hpp"

namespace ddpp {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

[[noreturn]] void bad_key(const std::string& key, const std::string& value, const char* expect) {
  throw Error(ErrorKind::config, "config key '" + key + "' = '" + value + "': expected " + expect);
}

long long to_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) bad_key(key, v, "an integer");
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double out = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size()) bad_key(key, v, "a number");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  bad_key(key, v, "true or false");
}

const std::string& get(const ConfigMap& cfg, const std::string& key) {
  const auto it = cfg.find(key);
  if (it == cfg.end()) throw Error(ErrorKind::config, "missing config key '" + key + "'");
  return it->second;
}

std::uint64_t partition_seed(std::uint64_t seed) { return seed ^ 0x9e3779b97f4a7c15ULL; }

std::string num(double v) {
  if (!std::isfinite(v)) return "NA";
  std::ostringstream s;
  s << std::setprecision(10) << v;
  return s.str();
}

}  // namespace

ConfigMap parse_config(const std::string& text) {
  ConfigMap out;
  std::istringstream in(text);
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorKind::config, "config line " + std::to_string(row) + ": expected key=value");
    const std::string key = trim(t.substr(0, eq));
    if (key.empty()) throw Error(ErrorKind::config, "config line " + std::to_string(row) + ": empty key");
    out[key] = trim(t.substr(eq + 1));
  }
  return out;
}

std::string format_config(const ConfigMap& cfg) {
  std::string out;
  for (const auto& [k, v] : cfg) out += k + " = " + v + "\n";
  return out;
}

ConfigMap default_campaign_config() {
  return {
      {"data", "synthetic"},
      {"format", "auto"},
      {"labels", "false"},
      {"partition_file", ""},
      {"partition", "cluster_skewed"},
      {"skew", "0.1"},
      {"synth.per_source", "500"},
      {"synth.m", "512"},
      {"synth.clusters", "auto"},
      {"synth.clusters_per_source", "1"},
      {"synth.spread", "1.5"},
      {"synth.scale", "10"},
      {"synth.layout", "block"},
      {"synth.background", "0.1"},
      {"N", "10"},
      {"kT", "120"},
      {"tT", "2"},
      {"R", "45"},
      {"epsilon", "1e-6"},
      {"block_fraction", "0.5"},
      {"momentum", "true"},
      {"transport", "loopback"},
      {"parallel_sources", "false"},
      {"strategies", "ddpp,greedi"},
      {"seeds", "20"},
      {"seed_base", "0"},
      {"out", "results"},
      {"scale", "auto"},
  };
}

std::string Method::label() const {
  if (strategy != Strategy::ddpp || compression == Compression::proposed) return to_string(strategy);
  return "ddpp-" + to_string(compression);
}

Method parse_method(const std::string& label) {
  Method m;
  const std::string prefix = "ddpp-";
  if (label.rfind(prefix, 0) == 0) {
    m.compression = parse_compression(label.substr(prefix.size()));
    return m;
  }
  m.strategy = parse_strategy(label);
  return m;
}

CampaignSpec CampaignSpec::from_config(const ConfigMap& overrides) {
  ConfigMap cfg = default_campaign_config();
  for (const auto& [k, v] : overrides) {
    if (!cfg.count(k)) throw Error(ErrorKind::config, "unknown config key '" + k + "'");
    cfg[k] = v;
  }

  CampaignSpec s;
  s.resolved = cfg;
  ExperimentConfig& b = s.base;
  b.total_select = to_int("kT", get(cfg, "kT"));
  b.intervals = to_int("tT", get(cfg, "tT"));
  b.epsilon = to_double("epsilon", get(cfg, "epsilon"));
  b.block_fraction = to_double("block_fraction", get(cfg, "block_fraction"));
  b.momentum = to_bool("momentum", get(cfg, "momentum"));
  b.transport = parse_transport(get(cfg, "transport"));
  b.parallel_sources = to_bool("parallel_sources", get(cfg, "parallel_sources"));
  if (b.total_select < 1 || b.intervals < 1) throw Error(ErrorKind::config, "kT and tT must be positive");

  for (const auto& m : split_list(get(cfg, "strategies"))) s.methods.push_back(parse_method(m));
  if (s.methods.empty()) throw Error(ErrorKind::config, "strategy list is empty");

  const std::string seeds = get(cfg, "seeds");
  if (seeds.find(',') != std::string::npos) {
    for (const auto& x : split_list(seeds)) s.seeds.push_back(static_cast<std::uint64_t>(to_int("seeds", x)));
  } else {
    const long long count = to_int("seeds", seeds);
    const long long base = to_int("seed_base", get(cfg, "seed_base"));
    for (long long i = 0; i < count; ++i) s.seeds.push_back(static_cast<std::uint64_t>(base + i));
  }
  if (s.seeds.empty()) throw Error(ErrorKind::config, "seed list is empty");

  for (const auto& x : split_list(get(cfg, "N"))) {
    const long long n = to_int("N", x);
    if (n < 1) bad_key("N", x, "a positive integer");
    s.source_counts.push_back(n);
  }
  if (s.source_counts.empty()) throw Error(ErrorKind::config, "N list is empty");

  // "0.75x" means 0.75 * kT / tT.
  for (const auto& x : split_list(get(cfg, "R"))) {
    double r = 0.0;
    if (x.back() == 'x')
      r = to_double("R", x.substr(0, x.size() - 1)) * static_cast<double>(b.total_select) /
          static_cast<double>(b.intervals);
    else
      r = to_double("R", x);
    if (!(r >= 0.0)) bad_key("R", x, "a non-negative number");
    s.sparsities.push_back(r);
  }
  if (s.sparsities.empty()) throw Error(ErrorKind::config, "R list is empty");
  b.sparsity = s.sparsities.front();

  s.out_dir = get(cfg, "out");
  s.data = get(cfg, "data");
  const std::string format = get(cfg, "format");
  if (format == "csv" || (format == "auto" && fs::path(s.data).extension() == ".csv"))
    s.format = FeatureFormat::csv;
  else if (format == "ddpm" || format == "auto")
    s.format = FeatureFormat::ddpm;
  else
    bad_key("format", format, "csv, ddpm or auto");
  s.csv_labels = to_bool("labels", get(cfg, "labels"));
  s.partition_file = get(cfg, "partition_file");
  const std::string policy = get(cfg, "partition");
  if (policy == "uniform_random")
    s.policy = PartitionPolicy::uniform_random;
  else if (policy == "cluster_skewed")
    s.policy = PartitionPolicy::cluster_skewed;
  else
    bad_key("partition", policy, "uniform_random or cluster_skewed");
  s.skew = to_double("skew", get(cfg, "skew"));

  s.per_source = to_int("synth.per_source", get(cfg, "synth.per_source"));
  s.synth.m = to_int("synth.m", get(cfg, "synth.m"));
  const std::string clusters = get(cfg, "synth.clusters");
  s.synth.n_clusters = clusters == "auto" ? 0 : to_int("synth.clusters", clusters);
  s.clusters_per_source = to_int("synth.clusters_per_source", get(cfg, "synth.clusters_per_source"));
  s.synth.spread = to_double("synth.spread", get(cfg, "synth.spread"));
  s.synth.scale = to_double("synth.scale", get(cfg, "synth.scale"));
  const std::string layout = get(cfg, "synth.layout");
  if (layout == "block")
    s.synth.layout = MixtureLayout::block;
  else if (layout == "isotropic")
    s.synth.layout = MixtureLayout::isotropic;
  else
    bad_key("synth.layout", layout, "block or isotropic");
  s.synth.background = to_double("synth.background", get(cfg, "synth.background"));

  const std::string scale = get(cfg, "scale");
  if (scale != "auto") {
    s.fixed_scale = to_double("scale", scale);
    if (!(*s.fixed_scale > 0.0)) bad_key("scale", scale, "a positive number or auto");
  }
  return s;
}

TrialData materialize(const CampaignSpec& spec, Index n_sources, std::uint64_t seed, const Dataset* loaded) {
  TrialData t;
  if (spec.data == "synthetic") {
    MixtureSpec ms = spec.synth;
    ms.seed = seed;
    ms.n = n_sources * spec.per_source;
    if (ms.n_clusters == 0) ms.n_clusters = spec.clusters_per_source * n_sources;
    t.dataset = synth_gaussian_mixture(ms);
  } else {
    t.dataset = loaded ? *loaded : load_features(spec.data, spec.format, spec.csv_labels);
  }

  if (!spec.partition_file.empty()) {
    t.parts = partition_from_json(read_file(spec.partition_file));
    if (t.parts.n_sources() != n_sources)
      throw Error(ErrorKind::config, "partition file has " + std::to_string(t.parts.n_sources()) +
                                         " sources but N = " + std::to_string(n_sources));
    t.parts.validate(t.dataset.size());
  } else {
    t.parts = partition(t.dataset.size(), n_sources, spec.policy, partition_seed(seed), t.dataset.labels, spec.skew);
  }

  if (spec.fixed_scale) {
    t.scale = *spec.fixed_scale;
  } else {
    IndexList pool;
    for (const auto& s : t.parts.sources) pool.insert(pool.end(), s.begin(), s.end());
    std::sort(pool.begin(), pool.end());
    t.scale = positivity_scale(select_rows(t.dataset.features, pool), spec.base.total_select);
  }
  t.dataset.features *= t.scale;
  return t;
}

std::string result_json(const ExperimentResult& r, const Method& method, const ExperimentConfig& cfg, Index n_sources,
                        Index m, double scale) {
  json j;
  j["strategy"] = to_string(r.strategy);
  j["compression"] = to_string(r.compression);
  j["label"] = method.label();
  j["seed"] = r.seed;
  j["rde"] = r.rde ? json(*r.rde) : json(nullptr);
  j["diversity"] = std::isfinite(r.diversity) ? json(r.diversity) : json(nullptr);
  j["gt_logdet"] = r.gt_logdet ? json(*r.gt_logdet) : json(nullptr);
  j["uplink_elements"] = r.ledger.uplink_elements;
  j["downlink_elements"] = r.ledger.downlink_elements;
  j["probe_elements"] = r.ledger.probe_elements;
  j["uplink_bytes"] = r.ledger.uplink_bytes;
  j["downlink_bytes"] = r.ledger.downlink_bytes;
  j["max_interval_downlink"] = r.ledger.max_interval_downlink;
  j["k_T"] = cfg.total_select;
  j["t_T"] = cfg.intervals;
  j["N"] = n_sources;
  j["R"] = cfg.sparsity;
  j["m"] = m;
  j["momentum"] = cfg.momentum;
  j["transport"] = to_string(cfg.transport);
  j["scale"] = scale;
  j["rank_exhausted"] = r.rank_exhausted;
  j["singular"] = r.singular;
  j["selected"] = r.selected;
  j["interval_seconds"] = r.interval_seconds;
  return j.dump();
}

unsigned worker_threads() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("DDPP_THREADS")) {
    const std::string v = env;
    unsigned cap = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), cap);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size() || cap == 0)
      throw Error(ErrorKind::config, "DDPP_THREADS must be a positive integer");
    n = cap;
  }
  return n;
}

std::size_t run_campaign(const CampaignSpec& spec, std::ostream& log) {
  fs::create_directories(fs::path(spec.out_dir) / "gt");
  std::optional<Dataset> loaded;
  if (spec.data != "synthetic") loaded = load_features(spec.data, spec.format, spec.csv_labels);

  struct Point {
    Index n_sources;
    std::uint64_t seed;
  };
  std::vector<Point> points;
  for (Index n : spec.source_counts)
    for (std::uint64_t s : spec.seeds) points.push_back({n, s});

  const fs::path results_path = fs::path(spec.out_dir) / "results.jsonl";
  std::ofstream results(results_path, std::ios::trunc);
  if (!results) throw Error(ErrorKind::config, "cannot write " + results_path.string());

  std::mutex mu;  // guards results, log, scales, first_error
  std::map<std::string, double> scales;
  std::exception_ptr first_error;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::size_t lines = 0;

  auto work = [&] {
    while (!stop) {
      const std::size_t idx = next++;
      if (idx >= points.size()) return;
      const Point p = points[idx];
      try {
        const auto t0 = std::chrono::steady_clock::now();
        const TrialData trial = materialize(spec, p.n_sources, p.seed, loaded ? &*loaded : nullptr);
        const Matrix& z = trial.dataset.features;
        const MapResult gt = run_ground_truth(z, trial.parts, spec.base.total_select);
        const std::string tag = "N" + std::to_string(p.n_sources) + "_seed" + std::to_string(p.seed);
        {
          json g;
          g["N"] = p.n_sources;
          g["seed"] = p.seed;
          g["scale"] = trial.scale;
          g["indices"] = gt.indices;
          g["logdet"] = gt.logdet();
          g["rank_exhausted"] = gt.rank_exhausted;
          write_text((fs::path(spec.out_dir) / "gt" / (tag + ".json")).string(), g.dump() + "\n");
        }
        std::vector<std::string> out;
        for (double r : spec.sparsities) {
          for (const Method& method : spec.methods) {
            ExperimentConfig cfg = spec.base;
            cfg.strategy = method.strategy;
            cfg.compression = method.compression;
            cfg.seed = p.seed;
            cfg.sparsity = r;
            const ExperimentResult res = run_experiment(cfg, z, trial.parts, &gt);
            out.push_back(result_json(res, method, cfg, p.n_sources, z.cols(), trial.scale));
          }
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::lock_guard<std::mutex> lock(mu);
        for (const auto& l : out) results << l << "\n";
        results.flush();
        lines += out.size();
        scales[tag] = trial.scale;
        log << "N=" << p.n_sources << " seed=" << p.seed << ": " << out.size() << " trials in " << std::fixed
            << std::setprecision(2) << secs << " s\n";
        log.unsetf(std::ios::floatfield);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!first_error) first_error = std::current_exception();
        stop = true;
      }
    }
  };

  const unsigned n_workers = std::min<unsigned>(worker_threads(), static_cast<unsigned>(points.size()));
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < n_workers; ++i) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);

  json manifest;
  manifest["tool_version"] = kToolVersion;
  manifest["config"] = spec.resolved;
  manifest["seeds"] = spec.seeds;
  manifest["N"] = spec.source_counts;
  manifest["R"] = spec.sparsities;
  manifest["scales"] = scales;
  manifest["result_lines"] = lines;
  write_text((fs::path(spec.out_dir) / "manifest.json").string(), manifest.dump(2) + "\n");
  return lines;
}

namespace {

struct Record {
  std::string label;
  Index n_sources = 0;
  double sparsity = 0.0;
  std::uint64_t seed = 0;
  std::optional<double> rde;
  std::optional<double> diversity;
  IndexList selected;
};

struct CellKey {
  std::string label;
  Index n_sources;
  double sparsity;
  auto operator<=>(const CellKey&) const = default;
};

std::vector<double> rdes(const std::vector<const Record*>& rs) {
  std::vector<double> out;
  for (const Record* r : rs)
    if (r->rde) out.push_back(*r->rde);
  return out;
}

}  // namespace

std::size_t write_report(const ReportOptions& opts, std::ostream& log) {
  const std::string text = read_file(opts.results_path);
  std::vector<Record> records;
  std::istringstream in(text);
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    try {
      const json j = json::parse(line);
      Record r;
      r.label = j.contains("label") ? j.at("label").get<std::string>() : j.at("strategy").get<std::string>();
      r.n_sources = j.at("N").get<Index>();
      r.sparsity = j.at("R").get<double>();
      r.seed = j.at("seed").get<std::uint64_t>();
      if (!j.at("rde").is_null()) r.rde = j.at("rde").get<double>();
      if (j.contains("diversity") && !j.at("diversity").is_null()) r.diversity = j.at("diversity").get<double>();
      if (j.contains("selected")) r.selected = j.at("selected").get<IndexList>();
      records.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw IngestError(row, std::string("bad result line: ") + e.what());
    }
  }
  if (records.empty()) throw Error(ErrorKind::config, "report: no result lines in " + opts.results_path);

  std::vector<std::string> labels;
  std::set<Index> ns;
  std::set<double> rs;
  std::map<CellKey, std::vector<const Record*>> cells;
  for (const auto& r : records) {
    if (std::find(labels.begin(), labels.end(), r.label) == labels.end()) labels.push_back(r.label);
    ns.insert(r.n_sources);
    rs.insert(r.sparsity);
    cells[{r.label, r.n_sources, r.sparsity}].push_back(&r);
  }
  fs::create_directories(opts.out_dir);
  const fs::path out(opts.out_dir);

  std::ostringstream summary;
  summary << "label,N,R,n,mean_rde,std_rde,mean_diversity\n";
  for (const auto& [key, rs_] : cells) {
    const Summary s = summarize(rdes(rs_));
    std::vector<double> div;
    for (const Record* r : rs_)
      if (r->diversity) div.push_back(*r->diversity);
    summary << key.label << "," << key.n_sources << "," << num(key.sparsity) << "," << s.n << ","
            << (s.n ? num(s.mean) : "NA") << "," << (s.n > 1 ? num(s.std) : "NA") << ","
            << (div.empty() ? "NA" : num(summarize(div).mean)) << "\n";
  }
  write_text((out / "summary.csv").string(), summary.str());

  // One row per method (and R when several), one mean/std column pair per N.
  std::ostringstream table;
  table << "method";
  for (Index n : ns) table << ",N=" << n << " mean,N=" << n << " std";
  table << "\n";
  for (const auto& label : labels) {
    for (double r : rs) {
      bool any = false;
      for (Index n : ns) any = any || cells.count({label, n, r});
      if (!any) continue;
      table << label;
      if (rs.size() > 1) table << "@R=" << num(r);
      for (Index n : ns) {
        const auto it = cells.find({label, n, r});
        const Summary s = it == cells.end() ? Summary{} : summarize(rdes(it->second));
        table << "," << (s.n ? num(s.mean) : "NA") << "," << (s.n > 1 ? num(s.std) : "NA");
      }
      table << "\n";
    }
  }
  write_text((out / "table.csv").string(), table.str());

  auto pairs = opts.pairs;
  if (pairs.empty() && std::find(labels.begin(), labels.end(), "ddpp") != labels.end())
    for (const auto& l : labels)
      if (l != "ddpp") pairs.emplace_back("ddpp", l);
  std::ostringstream tt;
  tt << "a,b,N,R,n_a,n_b,mean_a,mean_b,t,df,p\n";
  for (const auto& [a, b] : pairs) {
    for (Index n : ns) {
      for (double r : rs) {
        const auto ia = cells.find({a, n, r});
        const auto ib = cells.find({b, n, r});
        if (ia == cells.end() || ib == cells.end()) continue;
        const auto xa = rdes(ia->second), xb = rdes(ib->second);
        tt << a << "," << b << "," << n << "," << num(r) << "," << xa.size() << "," << xb.size() << ","
           << num(summarize(xa).mean) << "," << num(summarize(xb).mean) << ",";
        try {
          const TTestResult t = welch_ttest(xa, xb);
          tt << num(t.t) << "," << num(t.df) << "," << num(t.p) << "\n";
        } catch (const Error&) {
          tt << "NA,NA,NA\n";
        }
      }
    }
  }
  write_text((out / "ttest.csv").string(), tt.str());

  if (opts.pca_seed) {
    const fs::path manifest_path = fs::path(opts.results_path).parent_path() / "manifest.json";
    json manifest;
    try {
      manifest = json::parse(read_file(manifest_path.string()));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::config, "report: bad manifest " + manifest_path.string() + ": " + e.what());
    }
    const CampaignSpec spec = CampaignSpec::from_config(manifest.at("config").get<ConfigMap>());
    const Index n_src = opts.pca_sources.value_or(*ns.begin());
    const Record* chosen = nullptr;
    for (const auto& r : records)
      if (r.label == opts.pca_label && r.seed == *opts.pca_seed && r.n_sources == n_src) chosen = &r;
    if (!chosen)
      throw Error(ErrorKind::config, "report: no '" + opts.pca_label + "' result for seed " +
                                         std::to_string(*opts.pca_seed) + " and N = " + std::to_string(n_src));
    const TrialData trial = materialize(spec, n_src, *opts.pca_seed);
    const Matrix coords = pca2d(trial.dataset.features);
    const std::set<Index> sel(chosen->selected.begin(), chosen->selected.end());
    std::ostringstream pca;
    pca << "index,pc1,pc2,class,selected\n";
    for (Index i = 0; i < coords.rows(); ++i) {
      pca << i << "," << num(coords(i, 0)) << "," << num(coords(i, 1)) << ","
          << (trial.dataset.has_labels() ? std::to_string(trial.dataset.labels[static_cast<std::size_t>(i)]) : "NA")
          << "," << (sel.count(i) ? 1 : 0) << "\n";
    }
    write_text((out / "pca.csv").string(), pca.str());
  }

  log << "read " << records.size() << " result lines; wrote " << opts.out_dir << "\n";
  return records.size();
}

}  // namespace ddpp
