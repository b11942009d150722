#pragma once

#include <Eigen/Dense>

#include "vrlm/engine.hpp"
#include "vrlm/problems.hpp"
#include "vrlm/topology.hpp"

namespace vrlm {

// Stationarity terms of the reformulated problem plus consensus/residual
// diagnostics. The two primary quantities are
//   stationarity_primal = prox_grad_norm2 + consensus_term   and   lambda_grad_norm2;
// a point is eps-stationary when both are <= eps^2.
struct StationarityReport {
  double prox_grad_norm2 = 0.0;   // ||(xbar - prox step at xbar)/eta_x||^2
  double consensus_term = 0.0;    // (L^2/m) ||X_perp||_F^2
  double lambda_grad_norm2 = 0.0; // ||(L/(2 sqrt m))(W-I) Yhat||_F^2
  double y_gap = 0.0;             // ||Ytilde - Y||_F^2
  double tracking_residual = 0.0; // ||D - grad F(Z)||_F^2
  double v_consensus = 0.0;       // ||V_{perp,x}||_F^2
  long samples_so_far = 0;
  long comms_so_far = 0;

  double stationarity_primal() const { return prox_grad_norm2 + consensus_term; }
};

StationarityReport stationarity(const SwarmState& s, const ProblemOracle& p,
                                const MixingMatrix& W, double eta_x);

// DRO experiment metric:
//   ||xbar - prox_g(xbar - (1/m) sum_i grad_x f_i(xbar, y*))||^2
//     + ||X_perp||_F^2 + ||Y_perp||_F^2
// with y* maximizing the averaged objective at xbar. The prox uses unit step
// when unit_step is true (the reported form) and eta_x otherwise; both
// variants appear in the logs.
double experiment_metric_dro(const SwarmState& s, const ProblemOracle& p,
                             bool unit_step = true, double eta_x = 1.0);

// Per-agent variant for problems with separable duals:
//   ||(1/m) sum_i grad_x f_i(xbar, y_i*)||^2 + ||X_perp||_F^2 + ||Y_perp||_F^2
// where each y_i* maximizes the agent's own f_i(xbar, .) - h.
double per_agent_metric_fair(const SwarmState& s, const ProblemOracle& p);

// One metrics.csv row.
struct RunRecord {
  long t = 0;
  long samples = 0;
  long comms = 0;
  double prox_grad_norm2 = 0.0;
  double consensus_term = 0.0;
  double lambda_grad_norm2 = 0.0;
  double y_gap = 0.0;
  double tracking_residual = 0.0;
  double v_consensus = 0.0;
  double objective_estimate = 0.0;
  double wall_time_ms = 0.0;
};

// (1/m) sum_i f_i(x_i, y_i) + g(x_i), finite rows only.
double objective_estimate(const SwarmState& s, const ProblemOracle& p);

}  // namespace vrlm
