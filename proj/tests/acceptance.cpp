// One PASS/FAIL line per acceptance criterion. Exit status is 0 only when
// every criterion passes.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "ddpp/campaign.hpp"
#include "ddpp/csi.hpp"
#include "ddpp/dpp.hpp"
#include "ddpp/eval.hpp"
#include "ddpp/protocol.hpp"
#include "oracles.hpp"

using namespace ddpp;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances.
constexpr double kGreedyRatioSlack = 1e-9;
constexpr double kGreedyRatioShare = 0.95;
constexpr double kIdentityRel = 1e-6;
constexpr double kBoundSlack = -1e-8;
constexpr double kBoundEps = 1e-6;
constexpr double kIdempotence = 1e-7;
constexpr double kAnnihilation = 1e-9;
constexpr double kPValue = 0.05;

struct Outcome {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

Matrix random_psd(Index n, Index rank, std::mt19937_64& rng) { return oracle::naive_gram(oracle::gaussian(n, rank, rng)); }

// 1. Greedy against the stepwise oracle and brute force.
Outcome greedy_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1001);
  std::uniform_int_distribution<Index> size(4, 12), card(1, 4);
  const double bound = std::log(1.0 / (1.0 - std::exp(-1.0)));
  int mismatches = 0, within = 0, bf_below = 0;
  const int trials = 200;
  for (int t = 0; t < trials; ++t) {
    const Index n = size(rng);
    const Index k = std::min(card(rng), n);
    const Matrix l = random_psd(n, n, rng);
    const MapResult g = greedy_map(l, k);
    if (g.indices != oracle::stepwise_greedy(l, k).picks) ++mismatches;
    const MapResult bf = brute_force_map(l, k);
    const double lg = std::log(oracle::det(oracle::sub(l, g.indices)));
    const double lb = std::log(oracle::det(oracle::sub(l, bf.indices)));
    if (lb < lg - 1e-9) ++bf_below;
    if (lb - lg <= bound + kGreedyRatioSlack) ++within;
  }
  const double secs = since(t0);
  Outcome o;
  o.pass = mismatches == 0 && bf_below == 0 && within >= kGreedyRatioShare * trials && secs < 10.0;
  o.detail = std::to_string(mismatches) + " sequence mismatches, " + std::to_string(within) + "/200 within ln(1/(1-1/e)), " +
             fmt("%.2f s", secs);
  return o;
}

// 2. Schur determinant and Cauchy-Binet identities.
Outcome identities() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1002);
  double worst_schur = 0.0, worst_cb = 0.0;
  for (int t = 0; t < 100; ++t) {
    const Index m = 10;
    const Matrix za = oracle::gaussian(3, m, rng), zy = oracle::gaussian(4, m, rng);
    Matrix zu(7, m);
    zu << za, zy;
    const double lhs = oracle::det(oracle::naive_gram(zu));
    const Matrix h = compute_projector(zy, m).matrix;
    const double rhs = oracle::det(oracle::naive_gram(zy)) * oracle::det(za * h * za.transpose());
    worst_schur = std::max(worst_schur, rel_err(rhs, lhs));
  }
  for (int t = 0; t < 100; ++t) {
    const Index k = 3, m = 7;
    const Matrix z = oracle::gaussian(k, m, rng);
    double sum = 0.0;
    oracle::for_each_subset(m, k, [&](const IndexList& j) {
      Matrix c(k, k);
      for (Index q = 0; q < k; ++q) c.col(q) = z.col(j[static_cast<std::size_t>(q)]);
      sum += std::pow(oracle::det(c), 2);
    });
    worst_cb = std::max(worst_cb, rel_err(sum, oracle::det(oracle::naive_gram(z))));
  }
  const double secs = since(t0);
  Outcome o;
  o.pass = worst_schur <= kIdentityRel && worst_cb <= kIdentityRel && secs < 5.0;
  o.detail = "worst rel err Schur " + fmt("%.2e", worst_schur) + ", Cauchy-Binet " + fmt("%.2e", worst_cb) + ", " +
             fmt("%.2f s", secs);
  return o;
}

double logdet_plus_identity(const Matrix& a) { return std::log(oracle::det(a + Matrix::Identity(a.rows(), a.cols()))); }

// 3. Lower bounds on the diversity objective and the column-subset inequality.
Outcome bounds() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1003);
  const double inv = 1.0 / kBoundEps;
  double t1 = 1e300, t2a = 1e300, t2b = 1e300, t3 = 1e300;
  for (int t = 0; t < 100; ++t) {
    const Index n_src = 3, m = 6;
    std::vector<Matrix> a(n_src);
    Matrix sum = Matrix::Zero(m, m);
    double lower = 0.0;
    for (auto& z : a) {
      z = oracle::gaussian(2, m, rng);
      sum += z.transpose() * z;
      lower += logdet_plus_identity(inv * oracle::naive_gram(z)) / n_src;
    }
    t1 = std::min(t1, logdet_plus_identity(inv * sum / n_src) - lower);

    // Everything received so far is a prefix B_i of each A_i; Y_i collects
    // the other sources' prefixes.
    std::vector<Matrix> b(n_src);
    for (Index i = 0; i < n_src; ++i) b[i] = a[i].topRows(1);
    double cond = 0.0;
    for (Index i = 0; i < n_src; ++i) {
      Matrix zy_t_zy = Matrix::Zero(m, m);
      for (Index j = 0; j < n_src; ++j)
        if (j != i) zy_t_zy += b[j].transpose() * b[j];
      cond += logdet_plus_identity(inv * (a[i].transpose() * a[i] + zy_t_zy)) / n_src;
    }
    const double real = logdet_plus_identity(inv * sum);
    t2a = std::min(t2a, real - cond);
    t2b = std::min(t2b, cond - lower);
  }
  for (int t = 0; t < 100; ++t) {
    const Index k = 3, m = 7;
    const Matrix za = oracle::gaussian(k, m, rng);
    const Matrix h = compute_projector(oracle::gaussian(2, m, rng), m).matrix;
    const Matrix zh = za * psd_sqrt(h);
    const double zz = oracle::det(oracle::naive_gram(za));
    oracle::for_each_subset(m, k, [&](const IndexList& j) {
      Matrix c(k, k);
      for (Index q = 0; q < k; ++q) c.col(q) = zh.col(j[static_cast<std::size_t>(q)]);
      t3 = std::min(t3, zz * oracle::det(oracle::sub(h, j)) - std::pow(oracle::det(c), 2));
    });
  }
  const double secs = since(t0);
  Outcome o;
  o.pass = t1 >= kBoundSlack && t2a >= kBoundSlack && t2b >= kBoundSlack && t3 >= kBoundSlack && secs < 30.0;
  o.detail = "min slack " + fmt("%.2e", t1) + " / " + fmt("%.2e", t2a) + " / " + fmt("%.2e", t2b) + " / " +
             fmt("%.2e", t3) + ", " + fmt("%.2f s", secs);
  return o;
}

// 4. Projector properties, including rank-deficient Z_Y.
Outcome projectors() {
  std::mt19937_64 rng(1004);
  std::uniform_int_distribution<Index> dims(2, 16);
  double worst_sym = 0.0, worst_idem = 0.0, worst_ann = 0.0;
  int rank_errors = 0;
  for (int t = 0; t < 100; ++t) {
    const Index m = dims(rng);
    const Index rows = static_cast<Index>(rng() % static_cast<std::uint64_t>(m + 3));
    Matrix zy = oracle::gaussian(rows, m, rng);
    Index true_rank = std::min(rows, m);
    if (t % 3 == 0 && rows >= 2) {
      // Rank-deficient: every row is a combination of the first r rows.
      const Index r = std::max<Index>(1, std::min(rows, m) / 2);
      zy = oracle::gaussian(rows, r, rng) * oracle::gaussian(r, m, rng);
      true_rank = r;
    }
    const Projector h = compute_projector(zy, m);
    worst_sym = std::max(worst_sym, asymmetry(h.matrix));
    worst_idem = std::max(worst_idem, max_abs(h.matrix * h.matrix - h.matrix));
    if (rows > 0) worst_ann = std::max(worst_ann, max_abs(h.matrix * zy.transpose()) / std::max(1.0, max_abs(zy)));
    const Index rank = static_cast<Index>(std::lround(h.matrix.trace()));
    if (rank != m - true_rank || h.rank != m - true_rank) ++rank_errors;
  }
  Outcome o;
  o.pass = worst_sym <= 1e-12 && worst_idem <= kIdempotence && worst_ann <= kAnnihilation && rank_errors == 0;
  o.detail = "asymmetry " + fmt("%.1e", worst_sym) + ", |H^2-H| " + fmt("%.1e", worst_idem) + ", |H Z_Y^T| " +
             fmt("%.1e", worst_ann) + ", " + std::to_string(rank_errors) + " rank errors";
  return o;
}

// Conditional greedy over a source's samples given everything else received,
// using greedy_map on the union Gram with the received rows preselected.
IndexList conditional_picks(const Matrix& z, const IndexList& own, const IndexList& own_sent, const IndexList& others,
                            Index k) {
  IndexList pool = own;
  pool.insert(pool.end(), others.begin(), others.end());
  IndexList pre;
  for (std::size_t j = 0; j < own.size(); ++j)
    if (std::find(own_sent.begin(), own_sent.end(), own[j]) != own_sent.end()) pre.push_back(static_cast<Index>(j));
  for (std::size_t j = own.size(); j < pool.size(); ++j) pre.push_back(static_cast<Index>(j));
  const MapResult r = greedy_map(oracle::naive_gram(oracle::rows(z, pool)), k, pre);
  IndexList out;
  for (Index j : r.indices) out.push_back(pool[static_cast<std::size_t>(j)]);
  return out;
}

struct TwoSource {
  Matrix z;
  SourcePartition parts;
};

TwoSource two_source(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  TwoSource in;
  in.z = 2.0 * oracle::gaussian(40, 16, rng);
  in.parts = partition(40, 2, PartitionPolicy::uniform_random, seed);
  return in;
}

// Checks interval-two picks of a 2-source, 2-interval, quota-2 run against
// the conditional oracle.
bool matches_conditional(const TwoSource& in, const ExperimentResult& r) {
  if (r.selected.size() != 8) return false;
  auto slice = [&](std::size_t from) { return IndexList(r.selected.begin() + static_cast<long>(from), r.selected.begin() + static_cast<long>(from) + 2); };
  for (std::size_t src = 0; src < 2; ++src) {
    const IndexList mine1 = slice(2 * src), other1 = slice(2 * (1 - src)), mine2 = slice(4 + 2 * src);
    if (mine2 != conditional_picks(in.z, in.parts.sources[src], mine1, other1, 2)) return false;
  }
  return true;
}

ExperimentConfig exact_config() {
  ExperimentConfig cfg;
  cfg.total_select = 8;
  cfg.intervals = 2;
  cfg.sparsity = 1.0;
  cfg.compression = Compression::none;
  cfg.momentum = false;
  return cfg;
}

// 5. Exact feedback reproduces centralized conditional greedy.
Outcome exact_csi() {
  int ok = 0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const TwoSource in = two_source(5000 + s);
    ok += matches_conditional(in, run_experiment(exact_config(), in.z, in.parts));
  }
  Outcome o;
  o.pass = ok == 50;
  o.detail = std::to_string(ok) + "/50 instances match";
  return o;
}

// 6. Downlink budget and uplink totals over the sparsity grid.
Outcome budget() {
  const Index n_src = 5, m = 128, k = 120, t_t = 2;
  MixtureSpec ms{6, n_src * 150, m, 5, 1.0, 10.0, MixtureLayout::block, 0.1};
  const Dataset d = synth_gaussian_mixture(ms);
  const SourcePartition parts = partition(d.size(), n_src, PartitionPolicy::cluster_skewed, 6, d.labels, 0.3);
  int packets = 0, violations = 0, runs = 0;
  for (double f : {0.25, 0.4, 0.5, 0.75, 1.0}) {
    const double r = f * static_cast<double>(k) / static_cast<double>(t_t);
    for (const char* label : {"ddpp", "ddpp-svd", "ddpp-random_sketch", "greedi", "greedymax", "maxdiv", "random",
                              "stratified", "ground_truth"}) {
      const Method meth = parse_method(label);
      ExperimentConfig cfg;
      cfg.strategy = meth.strategy;
      cfg.compression = meth.compression;
      cfg.total_select = k;
      cfg.intervals = t_t;
      cfg.sparsity = r;
      const ExperimentResult res = run_experiment(cfg, d.features, parts);
      ++runs;
      for (auto e : res.ledger.packet_elements) {
        ++packets;
        if (static_cast<double>(e) > r * m) ++violations;
      }
      if (static_cast<double>(res.ledger.downlink_elements) > static_cast<double>(t_t * n_src) * r * m) ++violations;
      if (res.ledger.uplink_elements != k * m) ++violations;
    }
  }
  Outcome o;
  o.pass = violations == 0 && packets > 0;
  o.detail = std::to_string(runs) + " runs, " + std::to_string(packets) + " packets, " + std::to_string(violations) +
             " violations";
  return o;
}

// Shared campaign for criteria 7 and 8.
struct CampaignRows {
  std::map<std::pair<Index, std::string>, std::vector<double>> rde;
  std::string error;
  double seconds = 0.0;
};

CampaignRows run_ordering_campaign(Index m, const std::string& seeds, const std::string& dir) {
  CampaignRows out;
  fs::remove_all(dir);
  ConfigMap cfg{{"synth.m", std::to_string(m)},
                {"N", "5,10,20"},
                {"kT", "120"},
                {"tT", "2"},
                {"R", "0.75x"},
                {"seeds", seeds},
                {"out", dir},
                {"strategies", "ddpp,greedi,greedymax,maxdiv,random,stratified,ddpp-svd,ddpp-random_sketch"}};
  const auto t0 = Clock::now();
  try {
    std::ostringstream log;
    run_campaign(CampaignSpec::from_config(cfg), log);
  } catch (const Error& e) {
    out.error = e.what();
    return out;
  }
  out.seconds = since(t0);
  std::ifstream in(fs::path(dir) / "results.jsonl");
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    out.rde[{j.at("N").get<Index>(), j.at("label").get<std::string>()}].push_back(j.at("rde").get<double>());
  }
  return out;
}

double mean_of(const CampaignRows& c, Index n, const std::string& label) {
  const auto it = c.rde.find({n, label});
  return it == c.rde.end() ? std::nan("") : summarize(it->second).mean;
}

// 7. Method ordering over the seeds at m = 512 and m = 64.
Outcome ordering(const CampaignRows& big, const CampaignRows& small) {
  Outcome o;
  std::ostringstream d;
  for (const auto* c : {&big, &small}) {
    const Index m = c == &big ? 512 : 64;
    d << "m=" << m << ": ";
    if (!c->error.empty()) {
      o.pass = false;
      d << "not runnable (" << c->error << "); ";
      continue;
    }
    for (Index n : {5, 10, 20}) {
      const double dd = mean_of(*c, n, "ddpp"), gi = mean_of(*c, n, "greedi"), gm = mean_of(*c, n, "greedymax");
      const double tail = std::min({mean_of(*c, n, "random"), mean_of(*c, n, "stratified"), mean_of(*c, n, "maxdiv")});
      const double p = welch_ttest(c->rde.at({n, "ddpp"}), c->rde.at({n, "greedi"})).p;
      const bool ok = dd < gi && gi < gm && gm < tail && p < kPValue;
      o.pass = o.pass && ok;
      d << "N=" << n << " " << fmt("%.4f", dd) << (dd < gi ? "<" : "!<") << fmt("%.4f", gi) << (gi < gm ? "<" : "!<")
        << fmt("%.4f", gm) << (gm < tail ? "<" : "!<") << fmt("%.4f", tail) << " p=" << fmt("%.3g", p) << "; ";
    }
    d << fmt("%.0f s; ", c->seconds);
  }
  o.detail = d.str();
  return o;
}

// 8. Compression ablation at N = 10.
Outcome compression_ordering(const CampaignRows& c) {
  Outcome o;
  if (!c.error.empty()) return {false, c.error};
  const double p = mean_of(c, 10, "ddpp"), s = mean_of(c, 10, "ddpp-svd"), r = mean_of(c, 10, "ddpp-random_sketch");
  o.pass = p <= s && s <= r;
  o.detail = "proposed " + fmt("%.4f", p) + ", svd " + fmt("%.4f", s) + ", random_sketch " + fmt("%.4f", r) +
             ", greedi " + fmt("%.4f", mean_of(c, 10, "greedi"));
  return o;
}

// 9. Degenerate configurations.
Outcome degeneracies() {
  Outcome o;
  std::ostringstream d;
  const CampaignSpec spec = CampaignSpec::from_config({});

  {
    const TrialData t = materialize(spec, 1, 9);
    const MapResult gt = run_ground_truth(t.dataset.features, t.parts, 120);
    ExperimentConfig cfg = spec.base;
    const ExperimentResult r = run_experiment(cfg, t.dataset.features, t.parts, &gt);
    const bool ok = r.rde && *r.rde == 0.0;
    o.pass = o.pass && ok;
    d << "N=1 rde=" << (r.rde ? fmt("%.3g", *r.rde) : "none") << "; ";
  }
  {
    const TrialData t = materialize(spec, 10, 9);
    ExperimentConfig cfg = spec.base;
    cfg.intervals = 1;
    const ExperimentResult a = run_experiment(cfg, t.dataset.features, t.parts);
    cfg.strategy = Strategy::greedi;
    const ExperimentResult b = run_experiment(cfg, t.dataset.features, t.parts);
    const bool ok = std::set<Index>(a.selected.begin(), a.selected.end()) ==
                    std::set<Index>(b.selected.begin(), b.selected.end());
    o.pass = o.pass && ok;
    d << "t_T=1 ddpp " << (ok ? "==" : "!=") << " greedi; ";
  }
  {
    int ok = 0;
    for (std::uint64_t s = 0; s < 10; ++s) {
      const TwoSource in = two_source(9000 + s);
      ExperimentConfig cfg = exact_config();
      cfg.compression = Compression::proposed;
      cfg.sparsity = static_cast<double>(in.z.cols());  // R >= m covers the whole triangle
      const ExperimentResult full = run_experiment(cfg, in.z, in.parts);
      const ExperimentResult exact = run_experiment(exact_config(), in.z, in.parts);
      ok += full.selected == exact.selected && matches_conditional(in, full);
    }
    o.pass = o.pass && ok == 10;
    d << "full budget matches exact feedback on " << ok << "/10";
  }
  o.detail = d.str();
  return o;
}

SampleBatch random_batch(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> count(0, 6), dims(1, 6);
  SampleBatch b;
  b.source_id = static_cast<std::uint32_t>(rng() % 64);
  b.interval = static_cast<std::uint32_t>(rng() % 8);
  const int c = count(rng);
  for (int i = 0; i < c; ++i) b.local_indices.push_back(static_cast<Index>(rng() % 5000));
  b.vectors = oracle::gaussian(c, dims(rng), rng);
  return b;
}

FeedbackMsg random_feedback(std::mt19937_64& rng) {
  const Index m = 1 + static_cast<Index>(rng() % 10);
  const Projector h = compute_projector(oracle::gaussian(static_cast<Index>(rng() % static_cast<std::uint64_t>(m)), m, rng), m);
  const double r = 1.0 + static_cast<double>(rng() % 40) / 8.0;  // keeps R * m >= 1
  FeedbackMsg f;
  f.target_source = static_cast<std::uint32_t>(rng() % 64);
  f.interval = 2;
  switch (rng() % 3) {
    case 0: f.packet = compress(h, r, static_cast<double>(rng() % 5) / 4.0); break;
    case 1: f.packet = compress_svd(h, r); break;
    default: f.packet = exact_packet(h); break;
  }
  return f;
}

// 10. Wire round-trips and transport equivalence.
Outcome protocol_roundtrip() {
  std::mt19937_64 rng(1010);
  int bad = 0;
  for (int i = 0; i < 500; ++i) {
    const Bytes b = encode_batch(random_batch(rng));
    if (encode_batch(decode_batch(b)) != b) ++bad;
    const Bytes f = encode_feedback(random_feedback(rng));
    if (encode_feedback(decode_feedback(f)) != f) ++bad;
  }
  const CampaignSpec spec = CampaignSpec::from_config({});
  const TrialData t = materialize(spec, 5, 10);
  ExperimentConfig cfg = spec.base;
  cfg.sparsity = 45.0;
  const ExperimentResult loop = run_experiment(cfg, t.dataset.features, t.parts);
  cfg.transport = TransportKind::tcp;
  const ExperimentResult tcp = run_experiment(cfg, t.dataset.features, t.parts);
  const bool same = loop.selected == tcp.selected && loop.diversity == tcp.diversity &&
                    loop.ledger.uplink_bytes == tcp.ledger.uplink_bytes &&
                    loop.ledger.downlink_bytes == tcp.ledger.downlink_bytes;
  Outcome o;
  o.pass = bad == 0 && same;
  o.detail = std::to_string(1000 - bad) + "/1000 frames bitwise, loopback " + (same ? "==" : "!=") + " tcp";
  return o;
}

// 11. KNN accuracy of ddpp selections against stratified sampling.
Outcome knn_proxy() {
  const Index n_src = 5, per = 200, m = 32, k = 20;
  double acc_ddpp = 0.0, acc_strat = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    MixtureSpec ms{1100 + s, n_src * per + 1000, m, 2, 2.0, 2.0, MixtureLayout::isotropic, 0.0};
    const Dataset all = synth_gaussian_mixture(ms);
    const Index n = n_src * per;
    Dataset pool;
    pool.features = all.features.topRows(n);
    pool.labels.assign(all.labels.begin(), all.labels.begin() + n);
    const Matrix test = all.features.bottomRows(1000);
    const std::vector<std::int64_t> test_labels(all.labels.begin() + n, all.labels.end());
    const SourcePartition parts = partition(n, n_src, PartitionPolicy::cluster_skewed, s, pool.labels, 0.3);
    for (Strategy st : {Strategy::ddpp, Strategy::stratified}) {
      ExperimentConfig cfg;
      cfg.strategy = st;
      cfg.total_select = k;
      cfg.intervals = 2;
      cfg.sparsity = 0.75 * static_cast<double>(k) / 2.0;
      cfg.seed = s;
      const ExperimentResult r = run_experiment(cfg, pool.features, parts);
      std::vector<std::int64_t> labels;
      for (Index g : r.selected) labels.push_back(pool.labels[static_cast<std::size_t>(g)]);
      const double acc = knn_eval(select_rows(pool.features, r.selected), labels, test, test_labels, 5).accuracy;
      (st == Strategy::ddpp ? acc_ddpp : acc_strat) += acc / 20.0;
    }
  }
  Outcome o;
  o.pass = acc_ddpp >= acc_strat;
  o.detail = "mean accuracy ddpp " + fmt("%.4f", acc_ddpp) + ", stratified " + fmt("%.4f", acc_strat);
  return o;
}

}  // namespace

// An optional argument overrides the 20-seed campaign for quick runs.
int main(int argc, char** argv) {
  const std::string seeds = argc > 1 ? argv[1] : "20";
  const fs::path work = fs::temp_directory_path() / "ddpp_acceptance";
  int failed = 0;
  auto report = [&](int id, const char* name, const std::function<Outcome()>& f) {
    Outcome o;
    try {
      o = f();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
    std::fflush(stdout);
  };

  report(1, "greedy oracle equivalence", greedy_oracle);
  report(2, "identity suite", identities);
  report(3, "bound suite", bounds);
  report(4, "projector suite", projectors);
  report(5, "exact-CSI equivalence", exact_csi);
  report(6, "budget enforcement", budget);
  const CampaignRows big = run_ordering_campaign(512, seeds, (work / "m512").string());
  const CampaignRows small = run_ordering_campaign(64, seeds, (work / "m64").string());
  report(7, "method ordering", [&] { return ordering(big, small); });
  report(8, "compression ablation ordering", [&] { return compression_ordering(big); });
  report(9, "degeneracy checks", degeneracies);
  report(10, "protocol round-trip", protocol_roundtrip);
  report(11, "KNN proxy", knn_proxy);
  return failed == 0 ? 0 : 1;
}
