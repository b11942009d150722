#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "vrlm/errors.hpp"
#include "vrlm/harness.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json minimal_config() {
  return json::parse(R"({
    "problem": {"kind": "quadratic", "d1": 3, "d2": 2, "n": 4, "mu": 1.0,
                "noise": 0.1, "seed": 2},
    "topology": {"kind": "ring", "m": 4},
    "vr": {"kind": "spider"},
    "steps": {"mode": "manual", "eta_x": 0.01, "eta_y": 0.05,
              "eta_lambda": 0.01},
    "T": 20
  })");
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("defaults are filled for a minimal config") {
  json j = minimal_config();
  const vrlm::RunConfig cfg = vrlm::parse_config_json(j);
  CHECK(cfg.metric_every == 100);
  CHECK(cfg.seed == 0);
  CHECK(cfg.repetitions == 1);
  CHECK(cfg.method == "vrlm");
  CHECK(cfg.check_invariants);
  CHECK_FALSE(cfg.timing);
}

TEST_CASE("unknown keys are rejected by name") {
  json j = minimal_config();
  j["steps"]["etta_x"] = 0.1;
  try {
    vrlm::parse_config_json(j);
    FAIL("expected config_error");
  } catch (const vrlm::config_error& e) {
    CHECK(std::string(e.what()).find("etta_x") != std::string::npos);
  }
}

TEST_CASE("incompatible combinations are rejected") {
  SUBCASE("theory-mode finite-sum SPIDER with S1 != n") {
    json j = minimal_config();
    j["steps"] = {{"mode", "theory"}};
    j["vr"] = {{"kind", "spider"}, {"S1", 3}};
    const vrlm::RunConfig cfg = vrlm::parse_config_json(j);
    CHECK_THROWS_AS(vrlm::build_setup(cfg), vrlm::config_error);
  }
  SUBCASE("sgda requires manual steps") {
    json j = minimal_config();
    j["method"] = "sgda";
    j["steps"] = {{"mode", "theory"}};
    CHECK_THROWS_AS(vrlm::parse_config_json(j), vrlm::config_error);
  }
  SUBCASE("manual mode without eta_x") {
    json j = minimal_config();
    j["steps"] = {{"mode", "manual"}, {"eta_y", 0.1}};
    CHECK_THROWS_AS(vrlm::parse_config_json(j), vrlm::config_error);
  }
  SUBCASE("bad method") {
    json j = minimal_config();
    j["method"] = "adam";
    CHECK_THROWS_AS(vrlm::parse_config_json(j), vrlm::config_error);
  }
}

TEST_CASE("config round trip") {
  json j = minimal_config();
  j["sweep"] = json::array({{{"key", "vr.beta"}, {"values", {0.01, 0.1}}}});
  j["repetitions"] = 3;
  j["timing"] = true;
  const vrlm::RunConfig a = vrlm::parse_config_json(j);
  const vrlm::RunConfig b = vrlm::parse_config_json(vrlm::config_to_json(a));
  CHECK(vrlm::config_to_json(a) == vrlm::config_to_json(b));
}

TEST_CASE("batch size resolution") {
  json j = minimal_config();
  j["steps"] = {{"mode", "theory"}};
  const vrlm::RunSetup setup =
      vrlm::build_setup(vrlm::parse_config_json(j));
  // finite-sum SPIDER defaults: S1 = S0 = n, q = ceil(sqrt(n)), S2 = q
  CHECK(setup.vr.S1 == 4);
  CHECK(setup.vr.S0 == 4);
  CHECK(setup.vr.q == 2);
  CHECK(setup.vr.S2 == 2);

  j["vr"] = {{"kind", "storm"}};
  j["steps"] = {{"mode", "theory"}, {"eps", 0.05}};
  const vrlm::RunSetup storm =
      vrlm::build_setup(vrlm::parse_config_json(j));
  CHECK(storm.vr.batch == 1);
  CHECK(storm.steps.beta == storm.vr.beta);
  CHECK(storm.vr.beta > 0.0);
}

TEST_CASE("T = 0 logs the initial point only") {
  json j = minimal_config();
  j["T"] = 0;
  const vrlm::RunResult r = vrlm::run(vrlm::parse_config_json(j));
  CHECK(r.status == "ok");
  CHECK(r.records.size() == 1);
  CHECK(r.records[0].t == 0);
}

TEST_CASE("metric cadence includes t = 0 and the final iteration") {
  json j = minimal_config();
  j["T"] = 25;
  j["metric_every"] = 10;
  const vrlm::RunResult r = vrlm::run(vrlm::parse_config_json(j));
  REQUIRE(r.records.size() == 4);
  CHECK(r.records[0].t == 0);
  CHECK(r.records[1].t == 10);
  CHECK(r.records[2].t == 20);
  CHECK(r.records[3].t == 25);
}

TEST_CASE("identical config and seed give byte-identical outputs") {
  TempDir tmp("vrlm_repro_test");
  json j = minimal_config();
  j["T"] = 60;
  j["metric_every"] = 20;
  const vrlm::RunConfig cfg = vrlm::parse_config_json(j);
  const vrlm::RunResult r1 = vrlm::run(cfg);
  const vrlm::RunResult r2 = vrlm::run(cfg);
  vrlm::emit_outputs(r1, cfg, (tmp.path / "a").string());
  vrlm::emit_outputs(r2, cfg, (tmp.path / "b").string());
  CHECK(slurp(tmp.path / "a" / "metrics.csv") ==
        slurp(tmp.path / "b" / "metrics.csv"));
  CHECK(slurp(tmp.path / "a" / "summary.json") ==
        slurp(tmp.path / "b" / "summary.json"));
}

TEST_CASE("divergence yields a partial trace and a diverged summary") {
  TempDir tmp("vrlm_diverge_test");
  json j = minimal_config();
  j["T"] = 500;
  j["metric_every"] = 1;
  j["steps"]["eta_x"] = 1e10;
  j["steps"]["eta_y"] = 1e10;
  j["check_invariants"] = false;
  const vrlm::RunConfig cfg = vrlm::parse_config_json(j);
  const vrlm::RunResult r = vrlm::run(cfg);
  CHECK(r.status == "diverged");
  CHECK(r.records.size() >= 1);
  CHECK(r.records.back().t < 500);
  vrlm::emit_outputs(r, cfg, tmp.path.string());
  const std::string summary = slurp(tmp.path / "summary.json");
  CHECK(summary.find("\"diverged\"") != std::string::npos);
  // header plus one row per logged iteration
  std::istringstream csv(slurp(tmp.path / "metrics.csv"));
  std::string line;
  long lines = 0;
  while (std::getline(csv, line)) ++lines;
  CHECK(lines == static_cast<long>(r.records.size()) + 1);
}

TEST_CASE("empty record list gives a header-only CSV") {
  TempDir tmp("vrlm_header_test");
  vrlm::RunResult empty;
  const vrlm::RunConfig cfg = vrlm::parse_config_json(minimal_config());
  vrlm::emit_outputs(empty, cfg, tmp.path.string());
  const std::string csv = slurp(tmp.path / "metrics.csv");
  CHECK(csv.rfind("t,samples,comms", 0) == 0);
  CHECK(csv.find('\n') == csv.size() - 1);
}

TEST_CASE("repetition mode writes per-seed outputs and an aggregate") {
  TempDir tmp("vrlm_reps_test");
  json j = minimal_config();
  j["T"] = 30;
  j["metric_every"] = 10;
  j["repetitions"] = 5;
  j["out_dir"] = tmp.path.string();
  const auto results = vrlm::run_repetitions(vrlm::parse_config_json(j));
  CHECK(results.size() == 5);
  for (int r = 0; r < 5; ++r) {
    char sub[16];
    std::snprintf(sub, sizeof(sub), "rep_%03d", r);
    CHECK(fs::exists(tmp.path / sub / "metrics.csv"));
  }
  const std::string agg = slurp(tmp.path / "aggregate.csv");
  std::istringstream in(agg);
  std::string line;
  long lines = 0;
  while (std::getline(in, line)) ++lines;
  CHECK(lines == 1 + 4);  // header + records at t = 0, 10, 20, 30
  // different seeds must actually differ
  CHECK(slurp(tmp.path / "rep_000" / "metrics.csv") !=
        slurp(tmp.path / "rep_001" / "metrics.csv"));
}

TEST_CASE("sweeps") {
  TempDir tmp("vrlm_sweep_test");
  json j = minimal_config();
  j["T"] = 20;
  j["metric_every"] = 10;
  j["out_dir"] = tmp.path.string();

  SUBCASE("single-point sweep equals a single run") {
    j["sweep"] = json::array(
        {{{"key", "steps.eta_x"}, {"values", {0.01}}}});
    const auto rows = vrlm::sweep(vrlm::parse_config_json(j));
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].status == "ok");
    CHECK(fs::exists(tmp.path / "sweep_0000" / "metrics.csv"));
  }
  SUBCASE("2x2 grid yields four rows in deterministic order") {
    j["sweep"] = json::array(
        {{{"key", "steps.eta_x"}, {"values", {0.01, 0.02}}},
         {{"key", "steps.eta_y"}, {"values", {0.05, 0.1}}}});
    const auto rows = vrlm::sweep(vrlm::parse_config_json(j));
    REQUIRE(rows.size() == 4);
    for (const auto& row : rows) CHECK(row.status == "ok");
    CHECK(rows[0].label.find("eta_x=0.01") != std::string::npos);
    CHECK(rows[3].label.find("eta_y=0.1") != std::string::npos);
    CHECK(fs::exists(tmp.path / "sweep_summary.csv"));

    // repeated sweep with the same master seed reproduces the summary
    TempDir tmp2("vrlm_sweep_test2");
    j["out_dir"] = tmp2.path.string();
    const auto again = vrlm::sweep(vrlm::parse_config_json(j));
    REQUIRE(again.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(again[i].label == rows[i].label);
      CHECK(again[i].final_stationarity_primal == rows[i].final_stationarity_primal);
      CHECK(again[i].best_stationarity_primal == rows[i].best_stationarity_primal);
    }
  }
  SUBCASE("bad child configs are reported, not fatal") {
    j["sweep"] = json::array(
        {{{"key", "steps.eta_x"}, {"values", {0.01, -1.0}}}});
    const auto rows = vrlm::sweep(vrlm::parse_config_json(j));
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].status == "ok");
    CHECK(rows[1].status.rfind("error", 0) == 0);
  }
}

TEST_CASE("sample and communication accounting") {
  // Corollary-style schedule: S2 = q = ceil(sqrt(S1)), T divisible by q
  json j = minimal_config();
  j["problem"]["n"] = 16;
  j["vr"] = {{"kind", "spider"}, {"q", 4}, {"S0", 16}, {"S1", 16}, {"S2", 4}};
  j["T"] = 200;
  j["metric_every"] = 200;
  const vrlm::RunResult r = vrlm::run(vrlm::parse_config_json(j));
  REQUIRE(r.status == "ok");
  const long T = 200, q = 4, S1 = 16, S2 = 4, S0 = 16;
  const long expected = (T - T / q) * S2 + (T / q) * S1 + S0;
  CHECK(r.final_record.samples == expected);
  CHECK(r.final_record.comms == T);
}

TEST_CASE("config file parsing") {
  TempDir tmp("vrlm_cfgfile_test");
  const fs::path path = tmp.path / "cfg.json";
  {
    std::ofstream out(path);
    out << minimal_config().dump(2);
  }
  const vrlm::RunConfig cfg = vrlm::parse_config(path.string());
  CHECK(cfg.problem.n == 4);
  {
    std::ofstream out(path);
    out << "{ not json";
  }
  CHECK_THROWS_AS(vrlm::parse_config(path.string()), vrlm::config_error);
  CHECK_THROWS_AS(vrlm::parse_config((tmp.path / "missing.json").string()),
                  vrlm::config_error);
}

TEST_CASE("dro config end to end") {
  json j = minimal_config();
  j["problem"] = {{"kind", "dro"}, {"d1", 4},     {"mu", 10.0},
                  {"lambda_reg", 5e-4}, {"seed", 1}, {"dataset_rows", 80},
                  {"L_override", 0.7071067811865475}};
  j["topology"] = {{"kind", "ring"}, {"m", 4}};
  j["T"] = 50;
  j["metric_every"] = 25;
  const vrlm::RunResult r = vrlm::run(vrlm::parse_config_json(j));
  CHECK(r.status == "ok");
  CHECK(r.records.size() == 3);
}
