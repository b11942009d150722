#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "vrlm/engine.hpp"
#include "vrlm/metrics.hpp"
#include "vrlm/problems.hpp"
#include "vrlm/topology.hpp"
#include "vrlm/vr.hpp"

namespace vrlm {

struct ProblemConfig {
  std::string kind = "quadratic";  // "quadratic" | "dro"
  int d1 = 10;
  int d2 = 10;
  long n = 10;
  double mu = 1.0;
  double lambda_reg = 0.0;
  double noise = 0.0;  // quadratic perturbation scale
  std::uint64_t seed = 0;
  std::optional<double> L_override;
  std::optional<double> sigma2_override;
  std::string dataset;  // DRO: path to CSV; empty -> synthetic blobs
  long dataset_rows = 400;
  bool finite_sum = true;
};

struct TopologyConfig {
  std::string kind = "ring";  // "ring" | "complete" | "custom"
  int m = 8;
  std::vector<std::vector<double>> weights;  // custom only
  int mixing_power = 1;
};

struct StepConfig {
  std::string mode = "theory";  // "theory" | "manual"
  std::optional<double> eta_x, eta_y, eta_lambda, beta, eps;
};

struct SweepEntry {
  std::string key;  // dotted path, e.g. "vr.beta"
  std::vector<double> values;
};

struct RunConfig {
  ProblemConfig problem;
  TopologyConfig topology;
  std::string method = "vrlm";  // "vrlm" | "sgda"
  VrConfig vr;
  bool vr_given = false;
  StepConfig steps;
  long T = 1000;
  long metric_every = 100;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  int repetitions = 1;
  std::vector<SweepEntry> sweep;
  bool check_invariants = true;
  bool timing = false;  // wall_time_ms column stays 0 unless enabled
};

RunConfig parse_config(const std::string& path);
RunConfig parse_config_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& cfg);

// Instantiated problem + topology + resolved step sizes for one run.
struct RunSetup {
  std::unique_ptr<ProblemOracle> oracle;
  MixingMatrix topology;
  StepSizes steps;
  VrConfig vr;

  RunSetup(std::unique_ptr<ProblemOracle> o, MixingMatrix w, StepSizes s,
           VrConfig v)
      : oracle(std::move(o)), topology(std::move(w)), steps(s), vr(v) {}
};
RunSetup build_setup(const RunConfig& cfg);

struct RunResult {
  std::vector<RunRecord> records;
  std::string status = "ok";  // "ok" | "diverged" | "oracle-failure"
  std::string error;
  RunRecord final_record;
  RunRecord best_record;  // minimal primal stationarity quantity seen
  SwarmState final_state;
  double total_wall_ms = 0.0;
};

// Executes T iterations of the selected method with metrics at the configured
// cadence. Deterministic under a fixed seed. Divergence and oracle failures
// are captured in the result status (records up to the failure are kept).
RunResult run(const RunConfig& cfg);

// Writes metrics.csv, summary.json and config_echo.json under out_dir.
// Floats carry 17 significant digits so re-runs are byte-identical.
void emit_outputs(const RunResult& result, const RunConfig& cfg,
                  const std::string& out_dir);

// Runs repetitions with derived seeds, writing per-seed outputs plus a
// mean/stddev aggregate CSV. Returns per-seed results.
std::vector<RunResult> run_repetitions(const RunConfig& cfg);

struct SweepSummaryRow {
  std::string label;
  std::string status;
  double final_stationarity_primal = 0.0;
  double final_lambda_grad = 0.0;
  double best_stationarity_primal = 0.0;
  std::string out_dir;
};

// Cartesian expansion of the sweep list; each combination runs with an
// independent derived seed and its own subdirectory. Child failures are
// recorded and the sweep continues.
std::vector<SweepSummaryRow> sweep(const RunConfig& cfg);

}  // namespace vrlm
