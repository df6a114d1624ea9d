#include "ddpp/engine.hpp"

#include <algorithm>
#include <chrono>
#include <exception>
#include <numeric>
#include <random>
#include <set>
#include <thread>

#include "ddpp/csi.hpp"
#include "ddpp/eval.hpp"
#include "ddpp/protocol.hpp"

namespace ddpp {

namespace {

// Frames outside the wire formats: an empty frame means "no feedback this
// interval", a single 0xFF byte means "abort".
const Bytes kAbortFrame{0xFF};

bool is_abort(const Bytes& b) { return b == kAbortFrame; }

template <typename E>
struct NameTable {
  E value;
  const char* name;
};

constexpr NameTable<Strategy> kStrategies[] = {
    {Strategy::ddpp, "ddpp"},       {Strategy::greedi, "greedi"}, {Strategy::greedymax, "greedymax"},
    {Strategy::maxdiv, "maxdiv"},   {Strategy::random, "random"}, {Strategy::stratified, "stratified"},
    {Strategy::ground_truth, "ground_truth"},
};
constexpr NameTable<Compression> kCompressions[] = {
    {Compression::proposed, "proposed"},
    {Compression::svd, "svd"},
    {Compression::random_sketch, "random_sketch"},
    {Compression::none, "none"},
};
constexpr NameTable<TransportKind> kTransports[] = {
    {TransportKind::loopback, "loopback"},
    {TransportKind::tcp, "tcp"},
};

template <typename E, std::size_t N>
std::string name_of(const NameTable<E> (&table)[N], E v) {
  for (const auto& e : table)
    if (e.value == v) return e.name;
  return "?";
}

template <typename E, std::size_t N>
E parse_name(const NameTable<E> (&table)[N], const std::string& s, const char* what) {
  for (const auto& e : table)
    if (s == e.name) return e.value;
  throw Error(ErrorKind::config, std::string("unknown ") + what + " '" + s + "'");
}

bool uses_feedback(Strategy s) { return s == Strategy::ddpp; }

IndexList to_global(const IndexList& local, const IndexList& source) {
  IndexList out;
  out.reserve(local.size());
  for (Index i : local) out.push_back(source[static_cast<std::size_t>(i)]);
  return out;
}

// Charges a batch of raw sample vectors travelling from a source to the center.
void charge_uplink(BandwidthLedger& ledger, std::uint32_t source, std::uint32_t interval, const IndexList& local,
                   const Matrix& z_local) {
  SampleBatch b{source, interval, local, select_rows(z_local, local)};
  const Bytes frame = encode_batch(b);
  ledger.record_uplink_indices(source, interval, local);
  ledger.record(Direction::uplink, source, interval, static_cast<std::int64_t>(local.size()) * z_local.cols(),
                static_cast<std::int64_t>(frame.size()));
}

void charge_probe(BandwidthLedger& ledger, std::uint32_t source) {
  ledger.record(Direction::probe, source, 1, 1, sizeof(double));
}

LedgerSnapshot snapshot(const BandwidthLedger& l) {
  LedgerSnapshot s;
  s.uplink_elements = l.uplink_total();
  s.downlink_elements = l.downlink_total();
  s.probe_elements = l.probe_total();
  s.uplink_bytes = l.uplink_bytes();
  s.downlink_bytes = l.downlink_bytes();
  s.max_interval_downlink = l.max_interval_downlink();
  return s;
}

void finish(ExperimentResult& r, const Matrix& z) {
  if (r.selected.empty()) {
    r.singular = true;
    r.diversity = -std::numeric_limits<double>::infinity();
    return;
  }
  const SubsetLogdet d = subset_logdet(z, r.selected);
  r.diversity = d.value;
  r.singular = d.singular;
}

std::vector<Matrix> local_features(const Matrix& z, const SourcePartition& parts) {
  std::vector<Matrix> out;
  out.reserve(parts.sources.size());
  for (const auto& s : parts.sources) out.push_back(select_rows(z, s));
  return out;
}

/// Source side of one link: pre-codes with the received projector and sends
/// its greedy picks, conditioning on what it already sent.
class SourceNode {
 public:
  SourceNode(std::uint32_t id, Matrix z, Index quota, bool momentum)
      : id_(id), z_(std::move(z)), quota_(quota), momentum_(momentum) {}

  Bytes handle(std::uint32_t interval, const Bytes& frame) {
    MapResult picks;
    if (frame.empty()) {
      picks = greedy_map_features(z_, quota_, sent_);
    } else {
      const FeedbackMsg fb = decode_feedback(frame);
      if (fb.target_source != id_ || fb.interval != interval || fb.packet.dims != z_.cols())
        throw Error(ErrorKind::decode, "source " + std::to_string(id_) + ": feedback addressed elsewhere");
      picks = greedy_map_features(precode(z_, reconstruct(fb.packet), momentum_), quota_, sent_);
    }
    sent_.insert(sent_.end(), picks.indices.begin(), picks.indices.end());
    return encode_batch(SampleBatch{id_, interval, picks.indices, select_rows(z_, picks.indices)});
  }

 private:
  std::uint32_t id_;
  Matrix z_;
  Index quota_;
  bool momentum_;
  IndexList sent_;
};

CsiPacket compress_for(const ExperimentConfig& cfg, const Projector& h, std::uint32_t source,
                       std::uint32_t interval) {
  switch (cfg.compression) {
    case Compression::proposed:
      return compress(h, cfg.sparsity, cfg.block_fraction);
    case Compression::svd:
      return compress_svd(h, cfg.sparsity);
    case Compression::random_sketch: {
      std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32), source,
                        interval};
      std::mt19937_64 rng(seq);
      return compress_random_sketch(h, cfg.sparsity, rng);
    }
    case Compression::none:
      return exact_packet(h);
  }
  throw Error(ErrorKind::config, "unknown compression");
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

std::string to_string(Strategy s) { return name_of(kStrategies, s); }
std::string to_string(Compression c) { return name_of(kCompressions, c); }
std::string to_string(TransportKind t) { return name_of(kTransports, t); }
Strategy parse_strategy(const std::string& s) { return parse_name(kStrategies, s, "strategy"); }
Compression parse_compression(const std::string& s) { return parse_name(kCompressions, s, "compression"); }
TransportKind parse_transport(const std::string& s) { return parse_name(kTransports, s, "transport"); }

double ExperimentConfig::downlink_cap(Index m) const {
  const double budget = sparsity * static_cast<double>(m);
  if (compression == Compression::none) return std::max(budget, static_cast<double>(triangular(m)));
  return budget;
}

void ExperimentConfig::validate(Index n, Index m, const SourcePartition& parts) const {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::config, msg); };
  const Index n_src = parts.n_sources();
  if (n_src < 1) fail("no sources");
  if (m < 1) fail("dataset has no feature columns");
  parts.validate(n);
  if (total_select < 1) fail("k_T must be positive");
  if (intervals < 1) fail("t_T must be positive");
  if (!(sparsity >= 0.0)) fail("R must be non-negative");
  if (!(epsilon > 0.0)) fail("epsilon must be positive");
  if (!(block_fraction >= 0.0 && block_fraction <= 1.0)) fail("block_fraction must lie in [0, 1]");
  if (strategy != Strategy::random && strategy != Strategy::ground_truth && total_select % n_src != 0)
    fail("k_T = " + std::to_string(total_select) + " is not divisible by N = " + std::to_string(n_src));
  if (uses_feedback(strategy)) {
    if (total_select % (n_src * intervals) != 0)
      fail("k_T = " + std::to_string(total_select) + " is not divisible by N * t_T = " +
           std::to_string(n_src * intervals));
    if (compression != Compression::none && intervals > 1 && n_src > 1 && sparsity * static_cast<double>(m) < 1.0)
      fail("R * m must be at least 1");
  }

  Index total = 0, smallest = std::numeric_limits<Index>::max();
  for (const auto& s : parts.sources) {
    total += static_cast<Index>(s.size());
    smallest = std::min(smallest, static_cast<Index>(s.size()));
  }
  auto infeasible = [](const std::string& msg) { throw Error(ErrorKind::rank_infeasible, msg); };
  if (total_select > std::min(total, m))
    infeasible("k_T = " + std::to_string(total_select) + " exceeds the rank bound min(n, m) = " +
               std::to_string(std::min(total, m)));
  const bool single_winner = strategy == Strategy::greedymax || strategy == Strategy::maxdiv;
  const Index per_source = single_winner ? total_select : total_select / n_src;
  if (strategy != Strategy::random && strategy != Strategy::ground_truth && per_source > smallest)
    infeasible("a source with " + std::to_string(smallest) + " samples cannot supply " + std::to_string(per_source));
}

MapResult run_ground_truth(const Matrix& z, const SourcePartition& parts, Index k_total) {
  IndexList pool;
  for (const auto& s : parts.sources) pool.insert(pool.end(), s.begin(), s.end());
  std::sort(pool.begin(), pool.end());
  MapResult r = greedy_map_features(select_rows(z, pool), k_total);
  r.indices = to_global(r.indices, pool);
  return r;
}

double rate_distortion_diversity(const Matrix& z, double epsilon) {
  if (z.rows() == 0) return 0.0;
  const double c = static_cast<double>(z.cols()) / (static_cast<double>(z.rows()) * epsilon);
  // log det(I + c Z^T Z) = log det(I + c Z Z^T); factor the smaller side.
  Matrix g = z.rows() <= z.cols() ? gram(z) : gram(z.transpose());
  g *= c;
  g.diagonal().array() += 1.0;
  return logdet_psd(g);
}

ExperimentResult run_ddpp(const ExperimentConfig& cfg, const Matrix& z, const SourcePartition& parts) {
  cfg.validate(z.rows(), z.cols(), parts);
  const Index m = z.cols();
  const auto n_src = static_cast<std::size_t>(parts.n_sources());
  const Index quota = cfg.total_select / (parts.n_sources() * cfg.intervals);

  ExperimentResult res;
  res.strategy = Strategy::ddpp;
  res.compression = cfg.compression;
  res.seed = cfg.seed;

  BandwidthLedger ledger(n_src, cfg.downlink_cap(m));
  std::vector<SourceNode> nodes;
  {
    auto feats = local_features(z, parts);
    for (std::size_t i = 0; i < n_src; ++i)
      nodes.emplace_back(static_cast<std::uint32_t>(i), std::move(feats[i]), quota, cfg.momentum);
  }
  std::vector<Link> links = make_links(cfg.transport, n_src);
  const bool threaded = cfg.transport == TransportKind::tcp || cfg.parallel_sources;

  std::vector<std::exception_ptr> source_errors(n_src);
  std::vector<std::thread> workers;
  if (threaded) {
    for (std::size_t i = 0; i < n_src; ++i) {
      workers.emplace_back([&, i] {
        Channel& ch = *links[i].source;
        try {
          for (Index t = 1; t <= cfg.intervals; ++t) {
            const Bytes in = ch.receive();
            if (is_abort(in)) return;
            ch.send(nodes[i].handle(static_cast<std::uint32_t>(t), in));
          }
        } catch (...) {
          source_errors[i] = std::current_exception();
          try {
            ch.send(kAbortFrame);
          } catch (...) {
          }
        }
      });
    }
  }

  // Received rows, tagged by sender.
  std::vector<std::uint32_t> owner;
  IndexList received_global;
  Matrix received(0, m);

  auto run_center = [&] {
    for (Index t = 1; t <= cfg.intervals; ++t) {
      const auto interval = static_cast<std::uint32_t>(t);
      const auto t0 = Clock::now();
      for (std::size_t i = 0; i < n_src; ++i) {
        IndexList others;
        for (std::size_t r = 0; r < owner.size(); ++r)
          if (owner[r] != i) others.push_back(static_cast<Index>(r));
        Bytes frame;
        if (!others.empty()) {
          const Projector h = compute_projector(select_rows(received, others), m);
          FeedbackMsg fb{static_cast<std::uint32_t>(i), interval, compress_for(cfg, h, static_cast<std::uint32_t>(i), interval)};
          frame = encode_feedback(fb);
          ledger.record(Direction::downlink, static_cast<std::uint32_t>(i), interval, fb.packet.element_count,
                        static_cast<std::int64_t>(frame.size()));
          res.ledger.packet_elements.push_back(fb.packet.element_count);
        }
        links[i].center->send(frame);
        if (!threaded) {
          const Bytes in = links[i].source->receive();
          links[i].source->send(nodes[i].handle(interval, in));
        }
      }
      for (std::size_t i = 0; i < n_src; ++i) {
        const Bytes reply = links[i].center->receive();
        if (is_abort(reply)) std::rethrow_exception(source_errors[i]);
        const SampleBatch b = decode_batch(reply);
        if (b.source_id != i || b.interval != interval || b.vectors.cols() != m ||
            static_cast<Index>(b.local_indices.size()) > quota)
          throw Error(ErrorKind::decode, "malformed batch from source " + std::to_string(i));
        if (static_cast<Index>(b.local_indices.size()) < quota) res.rank_exhausted = true;
        ledger.record_uplink_indices(b.source_id, interval, b.local_indices);
        ledger.record(Direction::uplink, b.source_id, interval, static_cast<std::int64_t>(b.vectors.size()),
                      static_cast<std::int64_t>(reply.size()));
        const IndexList& src = parts.sources[i];
        for (Index li : b.local_indices) {
          if (li < 0 || li >= static_cast<Index>(src.size()))
            throw Error(ErrorKind::decode, "source " + std::to_string(i) + " sent an unknown local index");
          owner.push_back(b.source_id);
          received_global.push_back(src[static_cast<std::size_t>(li)]);
        }
        const Index old = received.rows();
        received.conservativeResize(old + b.vectors.rows(), Eigen::NoChange);
        received.bottomRows(b.vectors.rows()) = b.vectors;
      }
      res.interval_seconds.push_back(seconds_since(t0));
    }
  };

  try {
    run_center();
  } catch (...) {
    for (auto& l : links) {
      try {
        l.center->send(kAbortFrame);
      } catch (...) {
      }
    }
    for (auto& w : workers) w.join();
    throw;
  }
  for (auto& w : workers) w.join();

  res.selected = std::move(received_global);
  const auto packets = std::move(res.ledger.packet_elements);
  res.ledger = snapshot(ledger);
  res.ledger.packet_elements = packets;
  finish(res, z);
  return res;
}

ExperimentResult run_compression_variant(const ExperimentConfig& cfg, const Matrix& z, const SourcePartition& parts) {
  if (cfg.compression != Compression::svd && cfg.compression != Compression::random_sketch)
    throw Error(ErrorKind::config, "compression variant must be svd or random_sketch");
  return run_ddpp(cfg, z, parts);
}

ExperimentResult run_baseline(const ExperimentConfig& cfg, const Matrix& z, const SourcePartition& parts) {
  cfg.validate(z.rows(), z.cols(), parts);
  const auto n_src = static_cast<std::size_t>(parts.n_sources());
  const Index k = cfg.total_select;
  const auto t0 = Clock::now();

  ExperimentResult res;
  res.strategy = cfg.strategy;
  res.compression = cfg.compression;
  res.seed = cfg.seed;
  BandwidthLedger ledger(n_src, 0.0);
  const std::vector<Matrix> feats = local_features(z, parts);

  auto emit = [&](std::size_t i, const IndexList& local) {
    charge_uplink(ledger, static_cast<std::uint32_t>(i), 1, local, feats[i]);
    const IndexList g = to_global(local, parts.sources[i]);
    res.selected.insert(res.selected.end(), g.begin(), g.end());
  };

  switch (cfg.strategy) {
    case Strategy::greedi: {
      const Index quota = k / parts.n_sources();
      for (std::size_t i = 0; i < n_src; ++i) {
        const MapResult r = greedy_map_features(feats[i], quota);
        res.rank_exhausted = res.rank_exhausted || r.rank_exhausted;
        emit(i, r.indices);
      }
      // Second round over exactly k candidates keeps all of them when they
      // are independent.
      const MapResult second = greedy_map_features(select_rows(z, res.selected), k);
      if (!second.rank_exhausted) {
        std::set<Index> picked(second.indices.begin(), second.indices.end());
        if (static_cast<Index>(picked.size()) != static_cast<Index>(res.selected.size()))
          throw Error(ErrorKind::invalid_input, "greedi second round dropped a candidate");
      }
      break;
    }
    case Strategy::greedymax:
    case Strategy::maxdiv: {
      std::size_t winner = 0;
      double best = -std::numeric_limits<double>::infinity();
      std::vector<MapResult> candidates(n_src);
      for (std::size_t i = 0; i < n_src; ++i) {
        double score = 0.0;
        if (cfg.strategy == Strategy::greedymax) {
          candidates[i] = greedy_map_features(feats[i], k);
          score = candidates[i].logdet();
        } else {
          score = rate_distortion_diversity(feats[i], cfg.epsilon);
        }
        charge_probe(ledger, static_cast<std::uint32_t>(i));
        if (score > best) {
          best = score;
          winner = i;
        }
      }
      const MapResult r =
          cfg.strategy == Strategy::greedymax ? candidates[winner] : greedy_map_features(feats[winner], k);
      res.rank_exhausted = r.rank_exhausted;
      emit(winner, r.indices);
      break;
    }
    case Strategy::random: {
      std::mt19937_64 rng(cfg.seed);
      std::vector<std::pair<std::size_t, Index>> pool;  // (source, local)
      for (std::size_t i = 0; i < n_src; ++i)
        for (Index li = 0; li < static_cast<Index>(parts.sources[i].size()); ++li) pool.emplace_back(i, li);
      std::vector<IndexList> per_source(n_src);
      for (Index d = 0; d < k; ++d) {
        std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(d), pool.size() - 1);
        std::swap(pool[static_cast<std::size_t>(d)], pool[pick(rng)]);
        per_source[pool[static_cast<std::size_t>(d)].first].push_back(pool[static_cast<std::size_t>(d)].second);
      }
      for (std::size_t i = 0; i < n_src; ++i)
        if (!per_source[i].empty()) emit(i, per_source[i]);
      break;
    }
    case Strategy::stratified: {
      std::mt19937_64 rng(cfg.seed);
      const Index quota = k / parts.n_sources();
      for (std::size_t i = 0; i < n_src; ++i) {
        IndexList local(parts.sources[i].size());
        std::iota(local.begin(), local.end(), Index{0});
        for (Index d = 0; d < quota; ++d) {
          std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(d), local.size() - 1);
          std::swap(local[static_cast<std::size_t>(d)], local[pick(rng)]);
        }
        local.resize(static_cast<std::size_t>(quota));
        emit(i, local);
      }
      break;
    }
    case Strategy::ground_truth: {
      const MapResult gt = run_ground_truth(z, parts, k);
      res.rank_exhausted = gt.rank_exhausted;
      std::vector<IndexList> per_source(n_src);
      std::vector<std::pair<std::size_t, Index>> where(static_cast<std::size_t>(z.rows()), {n_src, -1});
      for (std::size_t i = 0; i < n_src; ++i)
        for (std::size_t li = 0; li < parts.sources[i].size(); ++li)
          where[static_cast<std::size_t>(parts.sources[i][li])] = {i, static_cast<Index>(li)};
      for (Index g : gt.indices) per_source[where[static_cast<std::size_t>(g)].first].push_back(where[static_cast<std::size_t>(g)].second);
      for (std::size_t i = 0; i < n_src; ++i) {
        if (per_source[i].empty()) continue;
        charge_uplink(ledger, static_cast<std::uint32_t>(i), 1, per_source[i], feats[i]);
      }
      res.selected = gt.indices;
      break;
    }
    case Strategy::ddpp:
      throw Error(ErrorKind::config, "ddpp is not a baseline");
  }

  res.interval_seconds.push_back(seconds_since(t0));
  res.ledger = snapshot(ledger);
  finish(res, z);
  return res;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const Matrix& z, const SourcePartition& parts,
                                const MapResult* gt) {
  ExperimentResult r;
  if (cfg.strategy == Strategy::ddpp) {
    r = cfg.compression == Compression::svd || cfg.compression == Compression::random_sketch
            ? run_compression_variant(cfg, z, parts)
            : run_ddpp(cfg, z, parts);
  } else {
    r = run_baseline(cfg, z, parts);
  }
  if (gt) {
    if (gt->indices.empty()) throw Error(ErrorKind::scaling_violation, "ground truth selected nothing");
    const RdeReport rep = rde_from_logdets(subset_logdet(z, gt->indices).value, r.diversity);
    r.rde = rep.rde;
    r.gt_logdet = rep.gt_logdet;
  }
  return r;
}

}  // namespace ddpp
