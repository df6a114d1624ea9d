#include <doctest.h>

#include <functional>
#include <set>

#include "ddpp/engine.hpp"
#include "oracles.hpp"

using namespace ddpp;

namespace {

struct Instance {
  Matrix z;
  SourcePartition parts;
};

Instance make_instance(std::uint64_t seed, Index n_sources, Index per_source, Index m) {
  std::mt19937_64 rng(seed);
  Instance in;
  in.z = 3.0 * oracle::gaussian(n_sources * per_source, m, rng);
  in.parts = partition(n_sources * per_source, n_sources, PartitionPolicy::uniform_random, seed);
  return in;
}

ExperimentConfig config(Strategy s, Index k, Index t, double r) {
  ExperimentConfig c;
  c.strategy = s;
  c.total_select = k;
  c.intervals = t;
  c.sparsity = r;
  return c;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected throw");
  return ErrorKind::invalid_input;
}

}  // namespace

TEST_CASE("names round-trip") {
  for (auto s : {Strategy::ddpp, Strategy::greedi, Strategy::greedymax, Strategy::maxdiv, Strategy::random,
                 Strategy::stratified, Strategy::ground_truth})
    CHECK(parse_strategy(to_string(s)) == s);
  for (auto c : {Compression::proposed, Compression::svd, Compression::random_sketch, Compression::none})
    CHECK(parse_compression(to_string(c)) == c);
  CHECK(parse_transport("tcp") == TransportKind::tcp);
  CHECK(kind_of([] { parse_strategy("bogus"); }) == ErrorKind::config);
}

TEST_CASE("config validation") {
  const Instance in = make_instance(1, 4, 30, 40);
  CHECK(kind_of([&] { config(Strategy::ddpp, 10, 2, 5).validate(120, 40, in.parts); }) == ErrorKind::config);
  CHECK(kind_of([&] { config(Strategy::ddpp, 12, 2, 5).validate(120, 40, in.parts); }) == ErrorKind::config);
  config(Strategy::greedi, 12, 2, 5).validate(120, 40, in.parts);
  CHECK(kind_of([&] { config(Strategy::greedi, 48, 1, 5).validate(120, 40, in.parts); }) ==
        ErrorKind::rank_infeasible);
  CHECK(kind_of([&] { config(Strategy::greedymax, 32, 1, 5).validate(120, 40, in.parts); }) ==
        ErrorKind::rank_infeasible);
  CHECK(kind_of([&] { config(Strategy::ddpp, 16, 2, 0.01).validate(120, 40, in.parts); }) == ErrorKind::config);
  ExperimentConfig none = config(Strategy::ddpp, 16, 2, 0.01);
  none.compression = Compression::none;
  none.validate(120, 40, in.parts);
  CHECK(none.downlink_cap(40) == 820.0);
}

TEST_CASE("a single interval makes ddpp coincide with greedi") {
  const Instance in = make_instance(2, 4, 40, 30);
  const ExperimentResult a = run_experiment(config(Strategy::ddpp, 16, 1, 5), in.z, in.parts);
  const ExperimentResult b = run_experiment(config(Strategy::greedi, 16, 1, 5), in.z, in.parts);
  CHECK(a.selected == b.selected);
  CHECK(a.ledger.downlink_elements == 0);
  CHECK(a.diversity == b.diversity);
}

TEST_CASE("one source with several intervals reproduces centralized greedy") {
  const Instance in = make_instance(3, 1, 60, 25);
  const MapResult gt = run_ground_truth(in.z, in.parts, 12);
  const ExperimentResult r = run_experiment(config(Strategy::ddpp, 12, 3, 2), in.z, in.parts, &gt);
  CHECK(r.selected == gt.indices);
  CHECK(*r.rde == 0.0);
}

TEST_CASE("exact feedback makes interval-two picks the conditional greedy") {
  for (std::uint64_t seed = 10; seed < 15; ++seed) {
    const Instance in = make_instance(seed, 2, 25, 20);
    ExperimentConfig cfg = config(Strategy::ddpp, 8, 2, 1);
    cfg.compression = Compression::none;
    cfg.momentum = false;
    const ExperimentResult r = run_experiment(cfg, in.z, in.parts);
    REQUIRE(r.selected.size() == 8);
    // arrival order: interval 1 (source 0, source 1), interval 2 (source 0, source 1)
    for (std::size_t src = 0; src < 2; ++src) {
      const IndexList& own = in.parts.sources[src];
      const IndexList mine1(r.selected.begin() + 2 * static_cast<long>(src),
                            r.selected.begin() + 2 * static_cast<long>(src) + 2);
      const IndexList other1(r.selected.begin() + 2 * static_cast<long>(1 - src),
                             r.selected.begin() + 2 * static_cast<long>(1 - src) + 2);
      const IndexList mine2(r.selected.begin() + 4 + 2 * static_cast<long>(src),
                            r.selected.begin() + 4 + 2 * static_cast<long>(src) + 2);
      // Oracle: greedy over own samples with the kernel conditioned on the
      // other source's received rows and on own earlier picks.
      IndexList pool = own;
      pool.insert(pool.end(), other1.begin(), other1.end());
      const Matrix l = oracle::naive_gram(oracle::rows(in.z, pool));
      IndexList pre;
      for (std::size_t j = 0; j < own.size(); ++j)
        if (std::find(mine1.begin(), mine1.end(), own[j]) != mine1.end()) pre.push_back(static_cast<Index>(j));
      for (std::size_t j = own.size(); j < pool.size(); ++j) pre.push_back(static_cast<Index>(j));
      const IndexList got = oracle::stepwise_greedy(l, 2, pre).picks;
      IndexList expect;
      for (Index j : got) expect.push_back(pool[static_cast<std::size_t>(j)]);
      CHECK(mine2 == expect);
    }
  }
}

TEST_CASE("ddpp ledger respects the per-interval downlink budget") {
  const Instance in = make_instance(4, 3, 40, 32);
  ExperimentConfig cfg = config(Strategy::ddpp, 18, 3, 1.5);
  const ExperimentResult r = run_experiment(cfg, in.z, in.parts);
  CHECK(r.selected.size() == 18);
  CHECK(std::set<Index>(r.selected.begin(), r.selected.end()).size() == 18);
  CHECK(r.ledger.uplink_elements == 18 * 32);
  CHECK(r.ledger.packet_elements.size() == 6);  // intervals 2 and 3, three sources each
  for (auto e : r.ledger.packet_elements) CHECK(e <= 48);
  CHECK(r.ledger.max_interval_downlink <= 48);
  CHECK(r.ledger.probe_elements == 0);
}

TEST_CASE("transports and threading do not change the selection") {
  const Instance in = make_instance(5, 3, 30, 24);
  ExperimentConfig cfg = config(Strategy::ddpp, 12, 2, 3);
  const ExperimentResult base = run_experiment(cfg, in.z, in.parts);
  cfg.parallel_sources = true;
  CHECK(run_experiment(cfg, in.z, in.parts).selected == base.selected);
  cfg.transport = TransportKind::tcp;
  const ExperimentResult tcp = run_experiment(cfg, in.z, in.parts);
  CHECK(tcp.selected == base.selected);
  CHECK(tcp.ledger.uplink_bytes == base.ledger.uplink_bytes);
  CHECK(tcp.ledger.downlink_bytes == base.ledger.downlink_bytes);
}

TEST_CASE("compression variants stay within the budget") {
  const Instance in = make_instance(6, 2, 40, 30);
  for (auto c : {Compression::svd, Compression::random_sketch, Compression::proposed}) {
    ExperimentConfig cfg = config(Strategy::ddpp, 12, 3, 2.5);
    cfg.compression = c;
    const ExperimentResult r = run_experiment(cfg, in.z, in.parts);
    CHECK(r.selected.size() == 12);
    for (auto e : r.ledger.packet_elements) CHECK(e <= 75);
  }
  ExperimentConfig cfg = config(Strategy::ddpp, 12, 3, 2.5);
  CHECK(kind_of([&] { run_compression_variant(cfg, in.z, in.parts); }) == ErrorKind::config);
}

TEST_CASE("baselines") {
  const Instance in = make_instance(7, 4, 30, 30);
  const MapResult gt = run_ground_truth(in.z, in.parts, 12);

  const ExperimentResult truth = run_experiment(config(Strategy::ground_truth, 12, 1, 0), in.z, in.parts, &gt);
  CHECK(truth.selected == gt.indices);
  CHECK(*truth.rde == 0.0);
  CHECK(truth.ledger.uplink_elements == 12 * 30);

  const ExperimentResult gm = run_experiment(config(Strategy::greedymax, 12, 1, 0), in.z, in.parts, &gt);
  CHECK(gm.ledger.probe_elements == 4);
  std::set<std::size_t> owners;
  for (Index g : gm.selected)
    for (std::size_t i = 0; i < 4; ++i)
      if (std::count(in.parts.sources[i].begin(), in.parts.sources[i].end(), g)) owners.insert(i);
  CHECK(owners.size() == 1);
  // The winner is the source whose own greedy log det is largest.
  double best = -1e300;
  for (const auto& s : in.parts.sources)
    best = std::max(best, oracle::stepwise_greedy(oracle::naive_gram(oracle::rows(in.z, s)), 12).logdets.back());
  CHECK(gm.diversity == doctest::Approx(best).epsilon(1e-9));

  const ExperimentResult md = run_experiment(config(Strategy::maxdiv, 12, 1, 0), in.z, in.parts, &gt);
  CHECK(md.selected.size() == 12);
  CHECK(md.ledger.probe_elements == 4);

  for (auto s : {Strategy::random, Strategy::stratified}) {
    ExperimentConfig cfg = config(s, 12, 1, 0);
    cfg.seed = 99;
    const ExperimentResult a = run_experiment(cfg, in.z, in.parts, &gt);
    CHECK(a.selected == run_experiment(cfg, in.z, in.parts, &gt).selected);
    CHECK(std::set<Index>(a.selected.begin(), a.selected.end()).size() == 12);
    CHECK(*a.rde >= 0.0);
    CHECK(*a.rde <= 1.0);
  }
  ExperimentConfig strat = config(Strategy::stratified, 12, 1, 0);
  const ExperimentResult st = run_experiment(strat, in.z, in.parts);
  for (std::size_t i = 0; i < 4; ++i) {
    int c = 0;
    for (Index g : st.selected) c += static_cast<int>(std::count(in.parts.sources[i].begin(), in.parts.sources[i].end(), g));
    CHECK(c == 3);
  }
}

TEST_CASE("rate-distortion diversity matches the direct formula") {
  std::mt19937_64 rng(8);
  for (auto [n, m] : {std::pair<Index, Index>{5, 9}, {9, 5}}) {
    const Matrix z = oracle::gaussian(n, m, rng);
    const double eps = 0.3;
    Matrix a = Matrix::Identity(m, m) + static_cast<double>(m) / (static_cast<double>(n) * eps) * z.transpose() * z;
    CHECK(rate_distortion_diversity(z, eps) == doctest::Approx(std::log(oracle::det(a))).epsilon(1e-9));
  }
  CHECK(rate_distortion_diversity(Matrix(0, 3), 1.0) == 0.0);
}

TEST_CASE("rank-deficient data is flagged, not fatal") {
  std::mt19937_64 rng(9);
  // 40 samples living in a 3-dimensional subspace of R^10.
  const Matrix z = oracle::gaussian(40, 3, rng) * oracle::gaussian(3, 10, rng);
  const SourcePartition p = partition(40, 2, PartitionPolicy::uniform_random, 1);
  const ExperimentResult r = run_experiment(config(Strategy::ddpp, 8, 2, 2), z, p);
  // Each source can still supply rank 3 on its own, so the union is singular.
  CHECK(r.rank_exhausted);
  CHECK(r.selected.size() == 6);
  CHECK(r.singular);
  CHECK(std::isinf(r.diversity));
}

TEST_CASE("feedback separates sources that share cluster directions") {
  // Both sources hold samples along e1 and e2; each also has a weaker private
  // direction. Without feedback both second picks duplicate the other
  // source's first pick.
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    std::mt19937_64 rng(seed);
    Matrix z(6, 4);
    z << 3.0, 0, 0, 0,  //
        0, 2.0, 0, 0,   //
        0, 0, 1.5, 0,   //
        0, 2.8, 0, 0,   //
        2.0, 0, 0, 0,   //
        0, 0, 0, 1.4;
    z += 0.01 * oracle::gaussian(6, 4, rng);
    const SourcePartition parts{{{0, 1, 2}, {3, 4, 5}}};
    const ExperimentResult fed = run_experiment(config(Strategy::ddpp, 4, 2, 2), z, parts);
    const ExperimentResult plain = run_experiment(config(Strategy::greedi, 4, 1, 2), z, parts);
    CHECK(fed.diversity > plain.diversity);
    CHECK(std::set<Index>(fed.selected.begin(), fed.selected.end()) == std::set<Index>{0, 2, 3, 5});
  }
}
