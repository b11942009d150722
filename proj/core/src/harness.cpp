#include "vrlm/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "vrlm/errors.hpp"
#include "vrlm/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace vrlm {

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed,
                    const std::string& where) {
  if (!j.is_object())
    throw config_error("\"" + where + "\" must be a JSON object");
  for (const auto& item : j.items())
    if (!allowed.contains(item.key()))
      throw config_error("unknown key \"" + item.key() + "\" in " + where);
}

double get_double(const json& j, const std::string& key) {
  if (!j.at(key).is_number())
    throw config_error("\"" + key + "\" must be a number");
  return j.at(key).get<double>();
}

long get_long(const json& j, const std::string& key) {
  const double v = get_double(j, key);
  const long r = std::lround(v);
  if (std::abs(v - static_cast<double>(r)) > 1e-9)
    throw config_error("\"" + key + "\" must be an integer");
  return r;
}

std::uint64_t get_u64(const json& j, const std::string& key) {
  if (j.at(key).is_number_unsigned()) return j.at(key).get<std::uint64_t>();
  const long v = get_long(j, key);
  if (v < 0) throw config_error("\"" + key + "\" must be nonnegative");
  return static_cast<std::uint64_t>(v);
}

std::string get_string(const json& j, const std::string& key) {
  if (!j.at(key).is_string())
    throw config_error("\"" + key + "\" must be a string");
  return j.at(key).get<std::string>();
}

bool get_bool(const json& j, const std::string& key) {
  if (!j.at(key).is_boolean())
    throw config_error("\"" + key + "\" must be a boolean");
  return j.at(key).get<bool>();
}

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw config_error("JSON parse failure in " + path + ": " + e.what());
  }
  return parse_config_json(j);
}

RunConfig parse_config_json(const json& j) {
  reject_unknown(j,
                 {"problem", "topology", "method", "vr", "steps", "T",
                  "metric_every", "seed", "out_dir", "repetitions", "sweep",
                  "check_invariants", "timing"},
                 "config");
  RunConfig cfg;

  if (j.contains("problem")) {
    const json& p = j.at("problem");
    reject_unknown(p,
                   {"kind", "d1", "d2", "n", "mu", "lambda_reg", "noise",
                    "seed", "L_override", "sigma2_override", "dataset",
                    "dataset_rows", "finite_sum"},
                   "problem");
    if (p.contains("kind")) cfg.problem.kind = get_string(p, "kind");
    if (cfg.problem.kind != "quadratic" && cfg.problem.kind != "dro")
      throw config_error("problem.kind must be \"quadratic\" or \"dro\"");
    if (p.contains("d1")) cfg.problem.d1 = static_cast<int>(get_long(p, "d1"));
    if (p.contains("d2")) cfg.problem.d2 = static_cast<int>(get_long(p, "d2"));
    if (p.contains("n")) cfg.problem.n = get_long(p, "n");
    if (p.contains("mu")) cfg.problem.mu = get_double(p, "mu");
    if (p.contains("lambda_reg"))
      cfg.problem.lambda_reg = get_double(p, "lambda_reg");
    if (p.contains("noise")) cfg.problem.noise = get_double(p, "noise");
    if (p.contains("seed")) cfg.problem.seed = get_u64(p, "seed");
    if (p.contains("L_override") && !p.at("L_override").is_null())
      cfg.problem.L_override = get_double(p, "L_override");
    if (p.contains("sigma2_override") && !p.at("sigma2_override").is_null())
      cfg.problem.sigma2_override = get_double(p, "sigma2_override");
    if (p.contains("dataset")) cfg.problem.dataset = get_string(p, "dataset");
    if (p.contains("dataset_rows"))
      cfg.problem.dataset_rows = get_long(p, "dataset_rows");
    if (p.contains("finite_sum"))
      cfg.problem.finite_sum = get_bool(p, "finite_sum");
    if (cfg.problem.d1 < 1 || cfg.problem.d2 < 1 || cfg.problem.n < 1)
      throw config_error("problem dimensions must be positive");
    if (cfg.problem.mu <= 0.0) throw config_error("problem.mu must be > 0");
    if (cfg.problem.lambda_reg < 0.0)
      throw config_error("problem.lambda_reg must be >= 0");
  }

  if (j.contains("topology")) {
    const json& t = j.at("topology");
    reject_unknown(t, {"kind", "m", "weights", "mixing_power"}, "topology");
    if (t.contains("kind")) cfg.topology.kind = get_string(t, "kind");
    if (cfg.topology.kind != "ring" && cfg.topology.kind != "complete" &&
        cfg.topology.kind != "custom")
      throw config_error(
          "topology.kind must be \"ring\", \"complete\" or \"custom\"");
    if (t.contains("m")) cfg.topology.m = static_cast<int>(get_long(t, "m"));
    if (t.contains("mixing_power"))
      cfg.topology.mixing_power = static_cast<int>(get_long(t, "mixing_power"));
    if (t.contains("weights")) {
      if (!t.at("weights").is_array())
        throw config_error("topology.weights must be an array of rows");
      cfg.topology.weights =
          t.at("weights").get<std::vector<std::vector<double>>>();
    }
    if (cfg.topology.kind == "custom" && cfg.topology.weights.empty())
      throw config_error("custom topology needs explicit weights");
    if (cfg.topology.m < 1) throw config_error("topology.m must be >= 1");
    if (cfg.topology.mixing_power < 1)
      throw config_error("topology.mixing_power must be >= 1");
  }

  if (j.contains("method")) cfg.method = get_string(j, "method");
  if (cfg.method != "vrlm" && cfg.method != "sgda")
    throw config_error("method must be \"vrlm\" or \"sgda\"");

  // Batch sizes default to -1 here and are resolved against the problem in
  // build_setup.
  cfg.vr.q = cfg.vr.S0 = cfg.vr.S1 = cfg.vr.S2 = cfg.vr.batch = -1;
  if (j.contains("vr")) {
    cfg.vr_given = true;
    const json& v = j.at("vr");
    reject_unknown(v, {"kind", "q", "S0", "S1", "S2", "beta", "batch"}, "vr");
    if (v.contains("kind")) {
      const std::string k = get_string(v, "kind");
      if (k == "spider")
        cfg.vr.kind = VrKind::Spider;
      else if (k == "storm")
        cfg.vr.kind = VrKind::Storm;
      else
        throw config_error("vr.kind must be \"spider\" or \"storm\"");
    }
    if (v.contains("q")) cfg.vr.q = get_long(v, "q");
    if (v.contains("S0")) cfg.vr.S0 = get_long(v, "S0");
    if (v.contains("S1")) cfg.vr.S1 = get_long(v, "S1");
    if (v.contains("S2")) cfg.vr.S2 = get_long(v, "S2");
    if (v.contains("beta")) cfg.vr.beta = get_double(v, "beta");
    if (v.contains("batch")) cfg.vr.batch = get_long(v, "batch");
  }

  if (j.contains("steps")) {
    const json& s = j.at("steps");
    reject_unknown(s, {"mode", "eta_x", "eta_y", "eta_lambda", "beta", "eps"},
                   "steps");
    if (s.contains("mode")) cfg.steps.mode = get_string(s, "mode");
    if (cfg.steps.mode != "theory" && cfg.steps.mode != "manual")
      throw config_error("steps.mode must be \"theory\" or \"manual\"");
    if (s.contains("eta_x")) cfg.steps.eta_x = get_double(s, "eta_x");
    if (s.contains("eta_y")) cfg.steps.eta_y = get_double(s, "eta_y");
    if (s.contains("eta_lambda"))
      cfg.steps.eta_lambda = get_double(s, "eta_lambda");
    if (s.contains("beta")) cfg.steps.beta = get_double(s, "beta");
    if (s.contains("eps")) cfg.steps.eps = get_double(s, "eps");
  }
  if (cfg.steps.mode == "manual") {
    if (!cfg.steps.eta_x || !cfg.steps.eta_y)
      throw config_error("manual step mode needs eta_x and eta_y");
    if (cfg.method == "vrlm" && !cfg.steps.eta_lambda)
      throw config_error("manual step mode needs eta_lambda for vrlm");
  }
  if (cfg.method == "sgda" && cfg.steps.mode != "manual")
    throw config_error("the sgda baseline only supports manual step sizes");

  if (j.contains("T")) cfg.T = get_long(j, "T");
  if (cfg.T < 0) throw config_error("T must be >= 0");
  if (j.contains("metric_every")) cfg.metric_every = get_long(j, "metric_every");
  if (cfg.metric_every < 1) throw config_error("metric_every must be >= 1");
  if (j.contains("seed")) cfg.seed = get_u64(j, "seed");
  if (j.contains("out_dir")) cfg.out_dir = get_string(j, "out_dir");
  if (j.contains("repetitions"))
    cfg.repetitions = static_cast<int>(get_long(j, "repetitions"));
  if (cfg.repetitions < 1) throw config_error("repetitions must be >= 1");
  if (j.contains("check_invariants"))
    cfg.check_invariants = get_bool(j, "check_invariants");
  if (j.contains("timing")) cfg.timing = get_bool(j, "timing");

  if (j.contains("sweep")) {
    if (!j.at("sweep").is_array())
      throw config_error("sweep must be an array of {key, values} entries");
    for (const json& e : j.at("sweep")) {
      reject_unknown(e, {"key", "values"}, "sweep entry");
      SweepEntry entry;
      entry.key = get_string(e, "key");
      if (!e.at("values").is_array() || e.at("values").empty())
        throw config_error("sweep entry \"" + entry.key +
                           "\" needs a nonempty values array");
      entry.values = e.at("values").get<std::vector<double>>();
      cfg.sweep.push_back(std::move(entry));
    }
  }
  return cfg;
}

json config_to_json(const RunConfig& cfg) {
  json p;
  p["kind"] = cfg.problem.kind;
  p["d1"] = cfg.problem.d1;
  p["d2"] = cfg.problem.d2;
  p["n"] = cfg.problem.n;
  p["mu"] = cfg.problem.mu;
  p["lambda_reg"] = cfg.problem.lambda_reg;
  p["noise"] = cfg.problem.noise;
  p["seed"] = cfg.problem.seed;
  if (cfg.problem.L_override) p["L_override"] = *cfg.problem.L_override;
  if (cfg.problem.sigma2_override)
    p["sigma2_override"] = *cfg.problem.sigma2_override;
  p["dataset"] = cfg.problem.dataset;
  p["dataset_rows"] = cfg.problem.dataset_rows;
  p["finite_sum"] = cfg.problem.finite_sum;

  json t;
  t["kind"] = cfg.topology.kind;
  t["m"] = cfg.topology.m;
  t["mixing_power"] = cfg.topology.mixing_power;
  if (!cfg.topology.weights.empty()) t["weights"] = cfg.topology.weights;

  json s;
  s["mode"] = cfg.steps.mode;
  if (cfg.steps.eta_x) s["eta_x"] = *cfg.steps.eta_x;
  if (cfg.steps.eta_y) s["eta_y"] = *cfg.steps.eta_y;
  if (cfg.steps.eta_lambda) s["eta_lambda"] = *cfg.steps.eta_lambda;
  if (cfg.steps.beta) s["beta"] = *cfg.steps.beta;
  if (cfg.steps.eps) s["eps"] = *cfg.steps.eps;

  json j;
  j["problem"] = p;
  j["topology"] = t;
  j["method"] = cfg.method;
  if (cfg.vr_given) {
    json v;
    v["kind"] = cfg.vr.kind == VrKind::Spider ? "spider" : "storm";
    if (cfg.vr.q >= 0) v["q"] = cfg.vr.q;
    if (cfg.vr.S0 >= 0) v["S0"] = cfg.vr.S0;
    if (cfg.vr.S1 >= 0) v["S1"] = cfg.vr.S1;
    if (cfg.vr.S2 >= 0) v["S2"] = cfg.vr.S2;
    v["beta"] = cfg.vr.beta;
    if (cfg.vr.batch >= 0) v["batch"] = cfg.vr.batch;
    j["vr"] = v;
  }
  j["steps"] = s;
  j["T"] = cfg.T;
  j["metric_every"] = cfg.metric_every;
  j["seed"] = cfg.seed;
  j["out_dir"] = cfg.out_dir;
  j["repetitions"] = cfg.repetitions;
  j["check_invariants"] = cfg.check_invariants;
  j["timing"] = cfg.timing;
  if (!cfg.sweep.empty()) {
    json sw = json::array();
    for (const auto& e : cfg.sweep)
      sw.push_back({{"key", e.key}, {"values", e.values}});
    j["sweep"] = sw;
  }
  return j;
}

RunSetup build_setup(const RunConfig& cfg) {
  MixingMatrix W = [&] {
    if (cfg.topology.kind == "ring") return MixingMatrix::ring(cfg.topology.m);
    if (cfg.topology.kind == "complete")
      return MixingMatrix::complete(cfg.topology.m);
    const long m = static_cast<long>(cfg.topology.weights.size());
    Eigen::MatrixXd Wm(m, m);
    for (long i = 0; i < m; ++i) {
      if (static_cast<long>(cfg.topology.weights[i].size()) != m)
        throw config_error("topology.weights must be square");
      for (long k = 0; k < m; ++k) Wm(i, k) = cfg.topology.weights[i][k];
    }
    if (m != cfg.topology.m)
      throw config_error("topology.m does not match the weights size");
    return MixingMatrix::validate(Wm);
  }();
  if (cfg.topology.mixing_power > 1) W = W.power(cfg.topology.mixing_power);

  std::unique_ptr<ProblemOracle> oracle;
  if (cfg.problem.kind == "quadratic") {
    auto q = QuadraticNCSC::random(cfg.topology.m, cfg.problem.d1,
                                   cfg.problem.d2, cfg.problem.n,
                                   cfg.problem.mu, cfg.problem.noise,
                                   cfg.problem.seed, cfg.problem.finite_sum);
    if (cfg.problem.lambda_reg > 0.0)
      q->set_g(ProxSpec::l1(cfg.problem.lambda_reg));
    oracle = std::move(q);
  } else {
    Dataset data = cfg.problem.dataset.empty()
                       ? make_two_blobs(cfg.problem.dataset_rows,
                                        cfg.problem.d1, cfg.problem.seed)
                       : load_dataset_csv(cfg.problem.dataset);
    oracle = std::make_unique<DROLogistic>(
        partition_dataset(data, cfg.topology.m, cfg.problem.seed),
        cfg.problem.mu, cfg.problem.lambda_reg);
  }
  if (cfg.problem.L_override)
    oracle->set_smoothness_override(*cfg.problem.L_override);
  if (cfg.problem.sigma2_override)
    oracle->set_variance_override(*cfg.problem.sigma2_override);

  const double L = oracle->smoothness();
  const double mu = oracle->strong_concavity();
  const double sigma = std::sqrt(oracle->variance_bound());

  StepSizes steps;
  if (cfg.steps.mode == "manual") {
    steps.mode = "manual";
    steps.eta_x = *cfg.steps.eta_x;
    steps.eta_y = *cfg.steps.eta_y;
    steps.eta_lambda = cfg.steps.eta_lambda.value_or(0.0);
    steps.beta = cfg.steps.beta.value_or(cfg.vr.beta);
  } else if (cfg.vr.kind == VrKind::Spider) {
    steps = theory_steps_spider(L, mu, W.rho());
  } else {
    if (!cfg.steps.eps)
      throw config_error("STORM theory step sizes need steps.eps");
    if (sigma <= 0.0)
      throw config_error(
          "STORM theory step sizes need a positive noise level; set "
          "problem.sigma2_override or add stochastic components");
    steps = theory_steps_storm(L, mu, W.rho(), sigma, *cfg.steps.eps);
  }
  if (steps.eta_x <= 0.0 || steps.eta_y <= 0.0)
    throw config_error("step sizes must be positive");

  VrConfig vr = cfg.vr;
  if (cfg.method == "sgda") {
    // The baseline is the beta = 1 momentum estimator, a plain minibatch.
    vr.kind = VrKind::Storm;
    vr.beta = 1.0;
    if (vr.batch < 0) vr.batch = 1;
    if (vr.S0 < 0) vr.S0 = vr.batch;
  } else if (vr.kind == VrKind::Spider) {
    if (vr.S1 < 0) {
      if (!oracle->finite_sum())
        throw config_error("streaming SPIDER needs an explicit S1");
      vr.S1 = oracle->components();
    }
    if (oracle->finite_sum() && vr.S1 > oracle->components())
      throw config_error("SPIDER big batch exceeds the component count");
    if (cfg.steps.mode == "theory" && oracle->finite_sum() &&
        vr.S1 != oracle->components())
      throw config_error(
          "theoretical finite-sum SPIDER requires the big batch S1 = n");
    if (vr.q < 0)
      vr.q = std::max(1L, static_cast<long>(
                              std::ceil(std::sqrt(double(vr.S1)))));
    if (vr.S2 < 0) vr.S2 = vr.q;
    if (vr.S0 < 0) vr.S0 = vr.S1;
  } else {
    vr.beta = cfg.steps.mode == "theory" ? steps.beta
                                         : cfg.steps.beta.value_or(vr.beta);
    if (vr.batch < 0) vr.batch = 1;
    if (vr.S0 < 0) {
      vr.S0 = (cfg.steps.mode == "theory" && sigma > 0.0)
                  ? storm_initial_batch(L, mu, W.rho(), sigma, vr.beta)
                  : vr.batch;
    }
    steps.beta = vr.beta;
    if (oracle->finite_sum() && vr.S0 > oracle->components())
      vr.S0 = oracle->components();
  }
  if (oracle->finite_sum() && vr.S0 > oracle->components())
    throw config_error("initial batch exceeds the component count");

  return RunSetup(std::move(oracle), std::move(W), steps, vr);
}

namespace {

// The sample mean of the tracked direction must equal the sample mean of the
// local estimates, the multiplier columns must stay mean-zero, the dual
// iterates must stay feasible, and the consensus-error recursion must hold.
void check_structural_invariants(const SwarmState& s, const ProblemOracle& p,
                                 const MixingMatrix& W, const StepSizes& steps,
                                 const IterateDiag& diag, bool lagrangian) {
  const Eigen::RowVectorXd dv =
      s.Vx.colwise().mean() - s.Dx.colwise().mean();
  const double d_scale = std::max(1.0, s.Dx.colwise().mean().norm());
  if (dv.norm() > 1e-10 * d_scale)
    throw numeric_error("tracking identity violated at t = " +
                        std::to_string(s.t));

  if (lagrangian) {
    const double l_scale = std::max(1.0, s.Lambda.norm());
    if (s.Lambda.colwise().mean().norm() > 1e-12 * l_scale)
      throw numeric_error("multiplier columns are not mean-zero at t = " +
                          std::to_string(s.t));
  }

  for (long i = 0; i < s.Y.rows(); ++i)
    if (!std::isfinite(p.h().value(s.Y.row(i).transpose())))
      throw numeric_error("dual iterate left dom h at t = " +
                          std::to_string(s.t));

  const double rho = W.rho();
  const double bound = rho * diag.x_perp2_before +
                       steps.eta_x * steps.eta_x / (1.0 - rho) * diag.v_perp2;
  const double slack = 1e-9 * std::max(1.0, bound);
  if (diag.x_perp2_after > bound + slack)
    throw numeric_error("consensus-error recursion violated at t = " +
                        std::to_string(s.t));
}

RunRecord make_record(const SwarmState& s, const ProblemOracle& p,
                      const MixingMatrix& W, const StepSizes& steps,
                      double wall_ms) {
  const StationarityReport rep = stationarity(s, p, W, steps.eta_x);
  RunRecord r;
  r.t = s.t;
  r.samples = s.samples;
  r.comms = s.comms;
  r.prox_grad_norm2 = rep.prox_grad_norm2;
  r.consensus_term = rep.consensus_term;
  r.lambda_grad_norm2 = rep.lambda_grad_norm2;
  r.y_gap = rep.y_gap;
  r.tracking_residual = rep.tracking_residual;
  r.v_consensus = rep.v_consensus;
  r.objective_estimate = objective_estimate(s, p);
  r.wall_time_ms = wall_ms;
  return r;
}

}  // namespace

RunResult run(const RunConfig& cfg) {
  RunSetup setup = build_setup(cfg);
  const ProblemOracle& p = *setup.oracle;
  const int m = p.agents();

  RunResult result;
  SwarmState s = SwarmState::zeros(m, p.primal_dim(), p.dual_dim());
  if (p.h().kind == ProxKind::SimplexIndicator)
    s.Y.setConstant(p.h().total / p.dual_dim());

  std::vector<Estimator> estimators;
  estimators.reserve(m);
  for (int i = 0; i < m; ++i)
    estimators.emplace_back(setup.vr, RngStream(cfg.seed, i));

  const auto start = std::chrono::steady_clock::now();
  auto elapsed_ms = [&] {
    if (!cfg.timing) return 0.0;
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - start)
        .count();
  };

  try {
    Eigen::VectorXd dx(p.primal_dim()), dy(p.dual_dim());
    long per_agent = 0;
    for (int i = 0; i < m; ++i) {
      per_agent = estimators[i].init(p, i, s.X.row(i).transpose(),
                                     s.Y.row(i).transpose(), dx, dy);
      s.Dx.row(i) = dx.transpose();
      s.Dy.row(i) = dy.transpose();
    }
    s.Vx = s.Dx;
    s.Vy = s.Dy;
    s.samples += per_agent;

    result.records.push_back(make_record(s, p, setup.topology, setup.steps,
                                         elapsed_ms()));
    const bool lagrangian = cfg.method == "vrlm";
    for (long t = 1; t <= cfg.T; ++t) {
      const IterateDiag diag =
          lagrangian
              ? vrlm_iterate(s, p, setup.topology, estimators, setup.steps)
              : sgda_iterate(s, p, setup.topology, estimators, setup.steps);
      if (cfg.check_invariants)
        check_structural_invariants(s, p, setup.topology, setup.steps, diag,
                                    lagrangian);
      if (t % cfg.metric_every == 0 || t == cfg.T)
        result.records.push_back(
            make_record(s, p, setup.topology, setup.steps, elapsed_ms()));
    }
  } catch (const diverged_error& e) {
    result.status = "diverged";
    result.error = e.what();
  } catch (const oracle_error& e) {
    result.status = "oracle-failure";
    result.error = e.what();
  }

  result.total_wall_ms = std::chrono::duration<double, std::milli>(
                             std::chrono::steady_clock::now() - start)
                             .count();
  if (!result.records.empty()) {
    result.final_record = result.records.back();
    result.best_record = *std::min_element(
        result.records.begin(), result.records.end(),
        [](const RunRecord& a, const RunRecord& b) {
          return a.prox_grad_norm2 + a.consensus_term <
                 b.prox_grad_norm2 + b.consensus_term;
        });
  }
  result.final_state = std::move(s);
  return result;
}

namespace {

json record_to_json(const RunRecord& r) {
  return json{{"t", r.t},
              {"samples", r.samples},
              {"comms", r.comms},
              {"prox_grad_norm2", r.prox_grad_norm2},
              {"consensus_term", r.consensus_term},
              {"stationarity_primal", r.prox_grad_norm2 + r.consensus_term},
              {"lambda_grad_norm2", r.lambda_grad_norm2},
              {"y_gap", r.y_gap},
              {"tracking_residual", r.tracking_residual},
              {"v_consensus", r.v_consensus},
              {"objective_estimate", r.objective_estimate}};
}

}  // namespace

void emit_outputs(const RunResult& result, const RunConfig& cfg,
                  const std::string& out_dir) {
  fs::create_directories(out_dir);

  {
    std::ofstream csv(fs::path(out_dir) / "metrics.csv");
    csv << "t,samples,comms,prox_grad_norm2,consensus_term,lambda_grad_norm2,"
           "y_gap,tracking_residual,v_consensus,objective_estimate,"
           "wall_time_ms\n";
    for (const RunRecord& r : result.records) {
      csv << r.t << ',' << r.samples << ',' << r.comms << ','
          << fmt17(r.prox_grad_norm2) << ',' << fmt17(r.consensus_term) << ','
          << fmt17(r.lambda_grad_norm2) << ',' << fmt17(r.y_gap) << ','
          << fmt17(r.tracking_residual) << ',' << fmt17(r.v_consensus) << ','
          << fmt17(r.objective_estimate) << ',' << fmt17(r.wall_time_ms)
          << '\n';
    }
  }

  {
    json summary;
    summary["status"] = result.status;
    if (!result.error.empty()) summary["error"] = result.error;
    summary["iterations"] = result.final_record.t;
    summary["samples_per_agent"] = result.final_record.samples;
    summary["communication_rounds"] = result.final_record.comms;
    summary["final"] = record_to_json(result.final_record);
    summary["best"] = record_to_json(result.best_record);
    if (cfg.timing) summary["wall_ms"] = result.total_wall_ms;
    std::ofstream out(fs::path(out_dir) / "summary.json");
    out << summary.dump(2) << '\n';
  }

  {
    std::ofstream out(fs::path(out_dir) / "config_echo.json");
    out << config_to_json(cfg).dump(2) << '\n';
  }
}

std::vector<RunResult> run_repetitions(const RunConfig& cfg) {
  std::vector<RunResult> results;
  if (cfg.repetitions == 1) {
    results.push_back(run(cfg));
    emit_outputs(results.back(), cfg, cfg.out_dir);
    return results;
  }

  for (int r = 0; r < cfg.repetitions; ++r) {
    RunConfig child = cfg;
    child.repetitions = 1;
    child.seed = derive_seed(cfg.seed, 0, static_cast<std::uint64_t>(r));
    char sub[32];
    std::snprintf(sub, sizeof(sub), "rep_%03d", r);
    child.out_dir = (fs::path(cfg.out_dir) / sub).string();
    results.push_back(run(child));
    emit_outputs(results.back(), child, child.out_dir);
  }

  // Aggregate over the shortest shared record prefix.
  std::size_t rows = results.front().records.size();
  for (const auto& res : results) rows = std::min(rows, res.records.size());
  fs::create_directories(cfg.out_dir);
  std::ofstream csv(fs::path(cfg.out_dir) / "aggregate.csv");
  csv << "t,stationarity_primal_mean,stationarity_primal_std,lambda_grad_mean,lambda_grad_std,"
         "objective_mean,objective_std\n";
  const double k = static_cast<double>(results.size());
  for (std::size_t i = 0; i < rows; ++i) {
    auto moments = [&](auto&& get) {
      double mean = 0.0;
      for (const auto& res : results) mean += get(res.records[i]);
      mean /= k;
      double var = 0.0;
      for (const auto& res : results) {
        const double d = get(res.records[i]) - mean;
        var += d * d;
      }
      var = results.size() > 1 ? var / (k - 1.0) : 0.0;
      return std::pair<double, double>(mean, std::sqrt(var));
    };
    const auto [pm, ps] = moments([](const RunRecord& r) {
      return r.prox_grad_norm2 + r.consensus_term;
    });
    const auto [lm, ls] =
        moments([](const RunRecord& r) { return r.lambda_grad_norm2; });
    const auto [om, os] =
        moments([](const RunRecord& r) { return r.objective_estimate; });
    csv << results.front().records[i].t << ',' << fmt17(pm) << ',' << fmt17(ps)
        << ',' << fmt17(lm) << ',' << fmt17(ls) << ',' << fmt17(om) << ','
        << fmt17(os) << '\n';
  }
  return results;
}

std::vector<SweepSummaryRow> sweep(const RunConfig& cfg) {
  if (cfg.sweep.empty()) throw config_error("sweep list is empty");

  std::vector<std::size_t> sizes, idx(cfg.sweep.size(), 0);
  std::size_t combos = 1;
  for (const auto& e : cfg.sweep) {
    sizes.push_back(e.values.size());
    combos *= e.values.size();
  }

  const json base = [&] {
    json b = config_to_json(cfg);
    b.erase("sweep");
    return b;
  }();

  std::vector<SweepSummaryRow> rows;
  for (std::size_t combo = 0; combo < combos; ++combo) {
    json child_json = base;
    std::string label;
    for (std::size_t e = 0; e < cfg.sweep.size(); ++e) {
      const double value = cfg.sweep[e].values[idx[e]];
      if (!label.empty()) label += ";";
      label += cfg.sweep[e].key + "=" + fmt17(value);

      json* node = &child_json;
      std::stringstream path(cfg.sweep[e].key);
      std::string part, prev;
      std::vector<std::string> parts;
      while (std::getline(path, part, '.')) parts.push_back(part);
      if (parts.empty())
        throw config_error("empty sweep key");
      for (std::size_t d = 0; d + 1 < parts.size(); ++d)
        node = &(*node)[parts[d]];
      (*node)[parts.back()] = value;
    }

    SweepSummaryRow row;
    row.label = label;
    char sub[32];
    std::snprintf(sub, sizeof(sub), "sweep_%04zu", combo);
    row.out_dir = (fs::path(cfg.out_dir) / sub).string();
    try {
      RunConfig child = parse_config_json(child_json);
      child.out_dir = row.out_dir;
      child.seed = derive_seed(cfg.seed, combo + 1, 0);
      const std::vector<RunResult> results = run_repetitions(child);
      const RunResult& first = results.front();
      row.status = first.status;
      row.final_stationarity_primal = first.final_record.prox_grad_norm2 +
                              first.final_record.consensus_term;
      row.final_lambda_grad = first.final_record.lambda_grad_norm2;
      row.best_stationarity_primal = first.best_record.prox_grad_norm2 +
                             first.best_record.consensus_term;
    } catch (const std::exception& e) {
      row.status = std::string("error: ") + e.what();
    }
    rows.push_back(std::move(row));

    for (std::size_t e = cfg.sweep.size(); e-- > 0;) {
      if (++idx[e] < sizes[e]) break;
      idx[e] = 0;
    }
  }

  fs::create_directories(cfg.out_dir);
  std::ofstream csv(fs::path(cfg.out_dir) / "sweep_summary.csv");
  csv << "label,status,final_stationarity_primal,final_lambda_grad,best_stationarity_primal,"
         "out_dir\n";
  for (const auto& r : rows)
    csv << '"' << r.label << "\"," << r.status << ','
        << fmt17(r.final_stationarity_primal) << ',' << fmt17(r.final_lambda_grad)
        << ',' << fmt17(r.best_stationarity_primal) << ',' << r.out_dir << '\n';
  return rows;
}

}  // namespace vrlm
