#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vrlm/engine.hpp"
#include "vrlm/errors.hpp"
#include "vrlm/harness.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitDiverged = 2;
constexpr int kExitOracle = 3;

void print_steps(const vrlm::StepSizes& s) {
  std::printf("eta_x      = %.17g\n", s.eta_x);
  std::printf("eta_y      = %.17g\n", s.eta_y);
  std::printf("eta_lambda = %.17g\n", s.eta_lambda);
  if (s.beta > 0.0) std::printf("beta       = %.17g\n", s.beta);
}

int do_run(const std::string& config_path) {
  const vrlm::RunConfig cfg = vrlm::parse_config(config_path);
  const std::vector<vrlm::RunResult> results = vrlm::run_repetitions(cfg);
  int worst = kExitOk;
  for (const vrlm::RunResult& r : results) {
    const vrlm::RunRecord& f = r.final_record;
    std::printf("status=%s t=%ld samples=%ld comms=%ld stationarity_primal=%.6g "
                "lambda_grad=%.6g\n",
                r.status.c_str(), f.t, f.samples, f.comms,
                f.prox_grad_norm2 + f.consensus_term, f.lambda_grad_norm2);
    if (!r.error.empty()) std::fprintf(stderr, "error: %s\n", r.error.c_str());
    if (r.status == "diverged") worst = std::max(worst, kExitDiverged);
    if (r.status == "oracle-failure") worst = std::max(worst, kExitOracle);
  }
  std::printf("outputs written to %s\n", cfg.out_dir.c_str());
  return worst;
}

int do_sweep(const std::string& config_path) {
  const vrlm::RunConfig cfg = vrlm::parse_config(config_path);
  const auto rows = vrlm::sweep(cfg);
  for (const auto& row : rows)
    std::printf("%-50s %-16s final=%.6g best=%.6g\n", row.label.c_str(),
                row.status.c_str(), row.final_stationarity_primal,
                row.best_stationarity_primal);
  std::printf("sweep summary written to %s/sweep_summary.csv\n",
              cfg.out_dir.c_str());
  return kExitOk;
}

int do_validate(const std::string& config_path) {
  const vrlm::RunConfig cfg = vrlm::parse_config(config_path);
  const vrlm::RunSetup setup = vrlm::build_setup(cfg);
  std::printf("config OK\n");
  std::printf("problem: %s, m=%d, d1=%d, d2=%d, n=%ld\n",
              cfg.problem.kind.c_str(), setup.oracle->agents(),
              setup.oracle->primal_dim(), setup.oracle->dual_dim(),
              setup.oracle->components());
  std::printf("L=%.6g mu=%.6g kappa=%.6g sigma2=%.6g rho=%.6g\n",
              setup.oracle->smoothness(), setup.oracle->strong_concavity(),
              setup.oracle->condition_number(),
              setup.oracle->variance_bound(), setup.topology.rho());
  print_steps(setup.steps);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"decentralized variance-reduced minimax simulator"};
  app.require_subcommand(1);

  std::string run_config, sweep_config, validate_config;
  app.add_subcommand("run", "execute one experiment from a JSON config")
      ->add_option("config", run_config, "path to config JSON")
      ->required();
  app.add_subcommand("sweep", "run the cartesian sweep from a JSON config")
      ->add_option("config", sweep_config, "path to config JSON")
      ->required();
  app.add_subcommand("validate",
                     "parse and instantiate a config without running")
      ->add_option("config", validate_config, "path to config JSON")
      ->required();

  double L = 0.0, mu = 0.0, rho = 0.0;
  std::vector<double> storm_args;
  CLI::App* steps_cmd =
      app.add_subcommand("steps", "print the theoretical step sizes");
  steps_cmd->add_option("L", L, "smoothness constant")->required();
  steps_cmd->add_option("mu", mu, "strong concavity constant")->required();
  steps_cmd->add_option("rho", rho, "mixing rate of the network")->required();
  steps_cmd->add_option("--storm", storm_args,
                        "sigma eps: use the STORM variant")
      ->expected(2);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (app.got_subcommand("run")) return do_run(run_config);
    if (app.got_subcommand("sweep")) return do_sweep(sweep_config);
    if (app.got_subcommand("validate")) return do_validate(validate_config);
    if (app.got_subcommand("steps")) {
      const vrlm::StepSizes s =
          storm_args.empty()
              ? vrlm::theory_steps_spider(L, mu, rho)
              : vrlm::theory_steps_storm(L, mu, rho, storm_args[0],
                                         storm_args[1]);
      print_steps(s);
      if (!storm_args.empty())
        std::printf("S0         = %ld\n",
                    vrlm::storm_initial_batch(L, mu, rho, storm_args[0],
                                              s.beta));
      return kExitOk;
    }
  } catch (const vrlm::diverged_error& e) {
    std::fprintf(stderr, "diverged: %s\n", e.what());
    return kExitDiverged;
  } catch (const vrlm::oracle_error& e) {
    std::fprintf(stderr, "oracle failure: %s\n", e.what());
    return kExitOracle;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  }
  return kExitConfig;
}
