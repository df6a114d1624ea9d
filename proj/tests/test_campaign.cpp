#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ddpp/campaign.hpp"

using namespace ddpp;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / "ddpp_test_campaign" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::vector<std::string> lines_of(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  std::string l;
  while (std::getline(in, l))
    if (!l.empty()) out.push_back(l);
  return out;
}

ConfigMap small_campaign(const fs::path& out) {
  return {{"synth.per_source", "30"}, {"synth.m", "24"}, {"kT", "8"},     {"tT", "2"},
          {"R", "0.5x"},              {"N", "2,4"},      {"seeds", "3"},  {"out", out.string()},
          {"strategies", "ddpp,greedi,random"}};
}

}  // namespace

TEST_CASE("config text parsing") {
  const ConfigMap c = parse_config("# comment\n\nN = 5,10\n kT=60 \nN=20\n");
  CHECK(c.at("N") == "20");
  CHECK(c.at("kT") == "60");
  CHECK(parse_config(format_config(c)) == c);
  CHECK_THROWS_AS(parse_config("no equals sign"), Error);
}

TEST_CASE("campaign spec resolution") {
  CampaignSpec s = CampaignSpec::from_config({});
  CHECK(s.base.total_select == 120);
  CHECK(s.sparsities == std::vector<double>{45.0});
  CHECK(s.seeds.size() == 20);
  CHECK(s.seeds.front() == 0);

  s = CampaignSpec::from_config({{"R", "0.75x, 20"}, {"seeds", "4,9"}, {"strategies", "ddpp-svd,maxdiv"}});
  CHECK(s.sparsities == std::vector<double>{45.0, 20.0});
  CHECK(s.seeds == std::vector<std::uint64_t>{4, 9});
  REQUIRE(s.methods.size() == 2);
  CHECK(s.methods[0].compression == Compression::svd);
  CHECK(s.methods[0].label() == "ddpp-svd");
  CHECK(s.methods[1].strategy == Strategy::maxdiv);

  for (const ConfigMap& bad : {ConfigMap{{"bogus", "1"}}, ConfigMap{{"kT", "ten"}}, ConfigMap{{"N", "0"}},
                               ConfigMap{{"strategies", "ddpp,nope"}}, ConfigMap{{"momentum", "maybe"}},
                               ConfigMap{{"scale", "-1"}}}) {
    try {
      CampaignSpec::from_config(bad);
      FAIL("expected throw");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::config);
    }
  }
}

TEST_CASE("materialize is deterministic and scales for positivity") {
  const CampaignSpec s = CampaignSpec::from_config(small_campaign(fresh_dir("mat")));
  const TrialData a = materialize(s, 4, 7), b = materialize(s, 4, 7);
  CHECK(a.dataset.features == b.dataset.features);
  CHECK(a.parts.sources == b.parts.sources);
  CHECK(a.dataset.size() == 120);
  CHECK(a.dataset.dims() == 24);
  CHECK(materialize(s, 4, 8).dataset.features != a.dataset.features);
  const MapResult gt = run_ground_truth(a.dataset.features, a.parts, 8);
  CHECK(gt.logdet() > 0.0);
}

TEST_CASE("campaign writes one line per trial and a manifest") {
  const fs::path out = fresh_dir("run");
  const CampaignSpec s = CampaignSpec::from_config(small_campaign(out));
  std::ostringstream log;
  CHECK(run_campaign(s, log) == 2 * 3 * 3);
  const auto lines = lines_of(out / "results.jsonl");
  CHECK(lines.size() == 18);
  for (const auto& l : lines) {
    const auto j = nlohmann::json::parse(l);
    CHECK(j.at("rde").get<double>() >= 0.0);
    CHECK(j.at("rde").get<double>() <= 1.0);
    CHECK(j.at("R").get<double>() == 2.0);
    CHECK(j.at("selected").size() == 8);
  }
  const auto manifest = nlohmann::json::parse(std::ifstream(out / "manifest.json"));
  CHECK(manifest.at("result_lines") == 18);
  CHECK(manifest.at("tool_version") == kToolVersion);
  CHECK(fs::exists(out / "gt" / "N4_seed2.json"));

  // Reruns reproduce everything except timings.
  const fs::path again = fresh_dir("run2");
  ConfigMap cfg = small_campaign(again);
  CampaignSpec s2 = CampaignSpec::from_config(cfg);
  run_campaign(s2, log);
  const auto lines2 = lines_of(again / "results.jsonl");
  auto strip = [](const std::string& l) {
    auto j = nlohmann::json::parse(l);
    j.erase("interval_seconds");
    return j;
  };
  std::vector<nlohmann::json> x, y;
  for (const auto& l : lines) x.push_back(strip(l));
  for (const auto& l : lines2) y.push_back(strip(l));
  auto key = [](const nlohmann::json& a, const nlohmann::json& b) { return a.dump() < b.dump(); };
  std::sort(x.begin(), x.end(), key);
  std::sort(y.begin(), y.end(), key);
  CHECK(x == y);

  ReportOptions opts;
  opts.results_path = (out / "results.jsonl").string();
  opts.out_dir = (out / "report").string();
  opts.pca_seed = 1;
  opts.pca_sources = 4;
  CHECK(write_report(opts, log) == 18);
  const auto table = lines_of(out / "report" / "table.csv");
  REQUIRE(table.size() == 4);
  CHECK(table[0] == "method,N=2 mean,N=2 std,N=4 mean,N=4 std");
  CHECK(table[1].rfind("ddpp,", 0) == 0);
  const auto tt = lines_of(out / "report" / "ttest.csv");
  CHECK(tt.size() == 1 + 2 * 2);
  const auto pca = lines_of(out / "report" / "pca.csv");
  CHECK(pca.size() == 1 + 120);
  int selected = 0;
  for (std::size_t i = 1; i < pca.size(); ++i) selected += pca[i].back() == '1';
  CHECK(selected == 8);
}

TEST_CASE("report rejects empty input") {
  const fs::path d = fresh_dir("empty");
  std::ofstream(d / "results.jsonl") << "\n";
  ReportOptions opts;
  opts.results_path = (d / "results.jsonl").string();
  opts.out_dir = (d / "out").string();
  std::ostringstream log;
  try {
    write_report(opts, log);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::config);
  }
}

TEST_CASE("divisibility failures surface as config errors") {
  ConfigMap cfg = small_campaign(fresh_dir("div"));
  cfg["N"] = "3";
  cfg["synth.per_source"] = "30";
  const CampaignSpec s = CampaignSpec::from_config(cfg);
  std::ostringstream log;
  try {
    run_campaign(s, log);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::config);
  }
}
