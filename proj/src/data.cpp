#include "ddpp/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "ddpp/dpp.hpp"

namespace ddpp {

namespace {

constexpr char kDatasetMagic[4] = {'D', 'D', 'P', 'M'};

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& s, double& v) {
  const std::string t = trim(s);
  if (t.empty()) return false;
  char* end = nullptr;
  v = std::strtod(t.c_str(), &end);
  return end == t.c_str() + t.size();
}

bool parse_int(const std::string& s, std::int64_t& v) {
  const std::string t = trim(s);
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  return res.ec == std::errc() && res.ptr == t.data() + t.size();
}

template <typename Rng>
void shuffle_indices(IndexList& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(v[i - 1], v[pick(rng)]);
  }
}

}  // namespace

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::ingest, "cannot open " + path + ": " + std::strerror(errno));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::config, "cannot write " + path + ": " + std::strerror(errno));
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::config, "write failed for " + path);
}

void write_text(const std::string& path, const std::string& text) {
  write_file(path, std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

Dataset parse_csv(const std::string& text, bool label_column) {
  std::vector<std::vector<double>> rows;
  std::vector<std::int64_t> labels;
  std::istringstream in(text);
  std::string line;
  std::size_t row = 0;
  std::size_t width = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    auto fields = split_fields(line);
    std::vector<double> values;
    bool numeric = true;
    const std::size_t n_feat = label_column ? (fields.empty() ? 0 : fields.size() - 1) : fields.size();
    for (std::size_t i = 0; i < n_feat; ++i) {
      double v = 0.0;
      if (!parse_double(fields[i], v)) {
        numeric = false;
        break;
      }
      values.push_back(v);
    }
    if (!numeric) {
      if (first) {  // header row
        first = false;
        continue;
      }
      throw IngestError(row, "non-numeric field");
    }
    first = false;
    for (double v : values)
      if (!std::isfinite(v)) throw IngestError(row, "non-finite entry");
    if (label_column) {
      std::int64_t lab = 0;
      if (fields.empty() || !parse_int(fields.back(), lab)) throw IngestError(row, "label is not an integer");
      labels.push_back(lab);
    }
    if (rows.empty()) width = values.size();
    if (values.size() != width || width == 0) throw IngestError(row, "dimension mismatch");
    rows.push_back(std::move(values));
  }
  Dataset d;
  d.features.resize(static_cast<Index>(rows.size()), static_cast<Index>(width));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < width; ++j) d.features(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  d.labels = std::move(labels);
  return d;
}

Bytes encode_ddpm(const Dataset& d) {
  if (d.has_labels() && static_cast<Index>(d.labels.size()) != d.size())
    throw Error(ErrorKind::invalid_input, "encode_ddpm: label count differs from sample count");
  Bytes out;
  auto put = [&out](const auto& v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    out.insert(out.end(), p, p + sizeof(v));
  };
  out.insert(out.end(), kDatasetMagic, kDatasetMagic + 4);
  put(std::uint16_t{1});
  put(static_cast<std::uint64_t>(d.size()));
  put(static_cast<std::uint64_t>(d.dims()));
  put(static_cast<std::uint8_t>(d.has_labels() ? 1 : 0));
  for (Index i = 0; i < d.size(); ++i)
    for (Index j = 0; j < d.dims(); ++j) put(d.features(i, j));
  for (std::int64_t l : d.labels) put(l);
  return out;
}

Dataset decode_ddpm(std::span<const std::uint8_t> bytes) {
  std::size_t pos = 0;
  auto need = [&](std::size_t k, const char* what) {
    if (bytes.size() - pos < k) throw DecodeError(pos, std::string("truncated dataset ") + what);
  };
  auto get = [&](auto& v, const char* what) {
    need(sizeof(v), what);
    std::memcpy(&v, bytes.data() + pos, sizeof(v));
    pos += sizeof(v);
  };
  need(4, "magic");
  if (std::memcmp(bytes.data(), kDatasetMagic, 4) != 0) throw DecodeError(0, "bad dataset magic");
  pos = 4;
  std::uint16_t version = 0;
  get(version, "version");
  if (version != 1) throw DecodeError(4, "unsupported dataset version");
  std::uint64_t n = 0, m = 0;
  std::uint8_t has_labels = 0;
  get(n, "n");
  get(m, "m");
  get(has_labels, "label flag");
  if (has_labels > 1) throw DecodeError(pos - 1, "bad label flag");
  const std::uint64_t per_row = m * sizeof(double) + (has_labels ? sizeof(std::int64_t) : 0);
  if (per_row != 0 && n > (bytes.size() - pos) / per_row) throw DecodeError(pos, "truncated dataset payload");
  Dataset d;
  d.features.resize(static_cast<Index>(n), static_cast<Index>(m));
  for (Index i = 0; i < d.size(); ++i) {
    for (Index j = 0; j < d.dims(); ++j) {
      double v = 0.0;
      get(v, "features");
      if (!std::isfinite(v)) throw IngestError(static_cast<std::size_t>(i), "non-finite entry");
      d.features(i, j) = v;
    }
  }
  if (has_labels) {
    d.labels.resize(n);
    for (auto& l : d.labels) get(l, "labels");
  }
  if (pos != bytes.size()) throw DecodeError(pos, "trailing bytes in dataset");
  return d;
}

Dataset load_features(const std::string& path, FeatureFormat format, bool label_column) {
  const std::string raw = read_file(path);
  if (format == FeatureFormat::csv) return parse_csv(raw, label_column);
  return decode_ddpm(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(raw.data()), raw.size()));
}

void save_ddpm(const std::string& path, const Dataset& d) { write_file(path, encode_ddpm(d)); }

void save_csv(const std::string& path, const Dataset& d) {
  std::ostringstream out;
  out.precision(17);
  for (Index i = 0; i < d.size(); ++i) {
    for (Index j = 0; j < d.dims(); ++j) out << (j ? "," : "") << d.features(i, j);
    if (d.has_labels()) out << "," << d.labels[static_cast<std::size_t>(i)];
    out << "\n";
  }
  write_text(path, out.str());
}

Dataset synth_gaussian_mixture(const MixtureSpec& spec) {
  if (spec.n < 1 || spec.m < 1) throw Error(ErrorKind::config, "synth: n and m must be positive");
  if (spec.n_clusters < 1 || spec.n_clusters > spec.n)
    throw Error(ErrorKind::config, "synth: need 1 <= clusters <= n");
  if (spec.layout == MixtureLayout::block && spec.n_clusters > spec.m)
    throw Error(ErrorKind::config, "synth: block layout needs clusters <= m");
  if (spec.spread < 0.0 || spec.scale <= 0.0 || spec.background < 0.0)
    throw Error(ErrorKind::config, "synth: spread, background must be >= 0 and scale > 0");

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Index m = spec.m;
  const Index k = spec.n_clusters;

  std::vector<IndexList> blocks(static_cast<std::size_t>(k));
  Matrix means = Matrix::Zero(k, m);
  if (spec.layout == MixtureLayout::block) {
    IndexList dims(static_cast<std::size_t>(m));
    std::iota(dims.begin(), dims.end(), Index{0});
    shuffle_indices(dims, rng);
    for (Index c = 0; c < k; ++c) {
      const Index lo = c * m / k, hi = (c + 1) * m / k;
      blocks[static_cast<std::size_t>(c)].assign(dims.begin() + lo, dims.begin() + hi);
      for (Index d : blocks[static_cast<std::size_t>(c)]) means(c, d) = std::abs(normal(rng));
    }
  } else {
    for (Index c = 0; c < k; ++c)
      for (Index d = 0; d < m; ++d) means(c, d) = normal(rng);
  }
  for (Index c = 0; c < k; ++c) {
    const double norm = means.row(c).norm();
    if (norm > 0.0) means.row(c) *= spec.scale / norm;
  }

  Dataset out;
  out.features.resize(spec.n, m);
  out.labels.resize(static_cast<std::size_t>(spec.n));
  std::uniform_int_distribution<Index> pick_cluster(0, k - 1);
  const double noise = spec.scale * spec.spread;
  for (Index i = 0; i < spec.n; ++i) {
    const Index c = pick_cluster(rng);
    out.labels[static_cast<std::size_t>(i)] = c;
    out.features.row(i) = means.row(c);
    if (spec.layout == MixtureLayout::block) {
      const auto& blk = blocks[static_cast<std::size_t>(c)];
      const double s = noise / std::sqrt(static_cast<double>(blk.size()));
      for (Index d : blk) out.features(i, d) += s * normal(rng);
      if (spec.background > 0.0) {
        const double bg = noise * spec.background / std::sqrt(static_cast<double>(m));
        for (Index d = 0; d < m; ++d) out.features(i, d) += bg * normal(rng);
      }
    } else {
      const double s = noise / std::sqrt(static_cast<double>(m));
      for (Index d = 0; d < m; ++d) out.features(i, d) += s * normal(rng);
    }
  }
  return out;
}

void SourcePartition::validate(Index n) const {
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  for (const auto& s : sources) {
    for (Index i : s) {
      if (i < 0 || i >= n) throw Error(ErrorKind::invalid_input, "partition: index out of range");
      if (seen[static_cast<std::size_t>(i)]) throw Error(ErrorKind::invalid_input, "partition: sources overlap");
      seen[static_cast<std::size_t>(i)] = true;
    }
  }
}

SourcePartition partition(Index n, Index n_sources, PartitionPolicy policy, std::uint64_t seed,
                          const std::vector<std::int64_t>& labels, double skew) {
  if (n_sources < 1 || n < 1) throw Error(ErrorKind::config, "partition: need n >= 1 and at least one source");
  if (n % n_sources != 0)
    throw Error(ErrorKind::config, "partition: " + std::to_string(n_sources) + " sources do not divide n = " +
                                       std::to_string(n));
  const Index per = n / n_sources;
  std::mt19937_64 rng(seed);
  IndexList order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  shuffle_indices(order, rng);

  SourcePartition out;
  out.sources.resize(static_cast<std::size_t>(n_sources));
  if (policy == PartitionPolicy::uniform_random) {
    for (Index s = 0; s < n_sources; ++s)
      out.sources[static_cast<std::size_t>(s)].assign(order.begin() + s * per, order.begin() + (s + 1) * per);
    return out;
  }

  if (static_cast<Index>(labels.size()) != n) throw Error(ErrorKind::config, "partition: cluster_skewed needs labels");
  if (skew < 0.0 || skew > 1.0) throw Error(ErrorKind::config, "partition: skew outside [0, 1]");
  std::map<std::int64_t, IndexList> pools;
  for (Index i : order) pools[labels[static_cast<std::size_t>(i)]].push_back(i);
  std::vector<std::int64_t> clusters;
  for (const auto& [c, pool] : pools) clusters.push_back(c);

  std::vector<bool> used(static_cast<std::size_t>(n), false);
  std::size_t cursor = 0;
  std::bernoulli_distribution from_home(1.0 - skew);
  for (Index s = 0; s < n_sources; ++s) {
    IndexList& mine = out.sources[static_cast<std::size_t>(s)];
    IndexList& home = pools[clusters[static_cast<std::size_t>(s) % clusters.size()]];
    while (static_cast<Index>(mine.size()) < per) {
      Index pick = -1;
      if (from_home(rng)) {
        while (!home.empty() && used[static_cast<std::size_t>(home.back())]) home.pop_back();
        if (!home.empty()) {
          pick = home.back();
          home.pop_back();
        }
      }
      if (pick < 0) {
        while (used[static_cast<std::size_t>(order[cursor])]) ++cursor;
        pick = order[cursor];
      }
      used[static_cast<std::size_t>(pick)] = true;
      mine.push_back(pick);
    }
  }
  return out;
}

std::string partition_to_json(const SourcePartition& p) {
  nlohmann::json j;
  j["n_sources"] = p.sources.size();
  j["sources"] = nlohmann::json::array();
  for (const auto& s : p.sources) j["sources"].push_back(s);
  return j.dump() + "\n";
}

SourcePartition partition_from_json(const std::string& text) {
  SourcePartition p;
  try {
    const auto j = nlohmann::json::parse(text);
    for (const auto& s : j.at("sources")) p.sources.push_back(s.get<IndexList>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ingest, std::string("partition json: ") + e.what());
  }
  return p;
}

double positivity_scale(const Matrix& z, Index k) {
  if (k < 1 || z.rows() == 0) throw Error(ErrorKind::invalid_input, "positivity_scale: need k >= 1 and samples");
  const Index probe = std::min<Index>(z.rows(), 4 * k);
  double worst = std::numeric_limits<double>::infinity();
  Index picks = k;
  for (std::uint64_t s = 0; s < 3; ++s) {
    std::mt19937_64 rng(s);
    IndexList order(static_cast<std::size_t>(z.rows()));
    std::iota(order.begin(), order.end(), Index{0});
    shuffle_indices(order, rng);
    order.resize(static_cast<std::size_t>(probe));
    const MapResult r = greedy_map_features(select_rows(z, order), k);
    if (r.indices.empty()) throw Error(ErrorKind::scaling_violation, "positivity_scale: probe has zero rank");
    if (r.logdet() < worst) {
      worst = r.logdet();
      picks = static_cast<Index>(r.indices.size());
    }
  }
  if (worst > 1.0) return 1.0;
  // log det gains 2 ln c per pick; aim for 1 + picks.
  return std::exp((1.0 + static_cast<double>(picks) - worst) / (2.0 * static_cast<double>(picks)));
}

}  // namespace ddpp
