#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "vrlm/problems.hpp"
#include "vrlm/topology.hpp"
#include "vrlm/vr.hpp"

namespace vrlm {

// Row-stacked network state. Row i belongs to agent i.
struct SwarmState {
  Eigen::MatrixXd X;       // m x d1 primal
  Eigen::MatrixXd Y;       // m x d2 dual
  Eigen::MatrixXd Lambda;  // m x d2 multipliers, start at 0
  Eigen::MatrixXd Dx, Dy;  // current gradient estimates
  Eigen::MatrixXd Vx;      // tracked primal direction
  Eigen::MatrixXd Vy;      // dual direction
  long t = 0;
  long samples = 0;  // per-agent stochastic gradient count
  long comms = 0;    // neighbor communication rounds

  static SwarmState zeros(int m, int d1, int d2);
};

struct StepSizes {
  double eta_x = 0.0;
  double eta_y = 0.0;
  double eta_lambda = 0.0;
  double beta = 0.0;  // STORM only
  std::string mode = "manual";
};

// Per-iteration diagnostics used by the structural-invariant checks.
struct IterateDiag {
  double x_perp2_before = 0.0;  // ||X_perp^(t)||_F^2
  double x_perp2_after = 0.0;   // ||X_perp^(t+1)||_F^2
  double v_perp2 = 0.0;         // ||V_{perp,x}^(t)||_F^2
};

double smoothness_lp(double L, double mu);  // L_P = L*sqrt(4k^2+1)
double smoothness_lq(double L, double mu);  // L_Q, same expression

// Theoretical step sizes for the SPIDER variant.
StepSizes theory_steps_spider(double L, double mu, double rho);

// Theoretical step sizes and momentum for the STORM variant. Warns on stderr
// when eps > sigma*(1-rho)^2 (outside the analyzed regime) but still computes.
StepSizes theory_steps_storm(double L, double mu, double rho, double sigma,
                             double eps);

// Theoretical STORM initial batch size S0.
long storm_initial_batch(double L, double mu, double rho, double sigma,
                         double beta);

// sigma^2 / S_t, the per-step estimator variance scale (documentation value).
double storm_upsilon(double sigma, long batch);

// One synchronous VRLM round (estimate -> V -> Lambda -> X,Y). Advances the
// communication counter by one round and the sample counter by the per-agent
// estimator batch size. Throws diverged_error past the 1e12 state-norm guard.
IterateDiag vrlm_iterate(SwarmState& s, const ProblemOracle& p,
                         const MixingMatrix& W,
                         std::vector<Estimator>& estimators,
                         const StepSizes& steps);

// Decentralized prox-SGDA baseline: gradient tracking on x, plain consensus
// on y, raw minibatch gradients, no multiplier.
IterateDiag sgda_iterate(SwarmState& s, const ProblemOracle& p,
                         const MixingMatrix& W,
                         std::vector<Estimator>& estimators,
                         const StepSizes& steps);

}  // namespace vrlm
