#include "vrlm/engine.hpp"

#include <cmath>
#include <iostream>
#include <string>

#include "vrlm/errors.hpp"

namespace vrlm {

namespace {

constexpr double kDivergenceGuard = 1e12;

double consensus_sq(const Eigen::MatrixXd& M) {
  const Eigen::RowVectorXd mean = M.colwise().mean();
  return (M.rowwise() - mean).squaredNorm();
}

void check_divergence(const SwarmState& s) {
  const double norm = std::max(
      {s.X.norm(), s.Y.norm(), s.Lambda.norm(), s.Vx.norm(), s.Vy.norm()});
  if (!std::isfinite(norm) || norm > kDivergenceGuard)
    throw diverged_error("state norm " + std::to_string(norm) +
                             " exceeded the divergence guard",
                         s.t, norm);
}

}  // namespace

SwarmState SwarmState::zeros(int m, int d1, int d2) {
  SwarmState s;
  s.X = Eigen::MatrixXd::Zero(m, d1);
  s.Y = Eigen::MatrixXd::Zero(m, d2);
  s.Lambda = Eigen::MatrixXd::Zero(m, d2);
  s.Dx = Eigen::MatrixXd::Zero(m, d1);
  s.Dy = Eigen::MatrixXd::Zero(m, d2);
  s.Vx = Eigen::MatrixXd::Zero(m, d1);
  s.Vy = Eigen::MatrixXd::Zero(m, d2);
  return s;
}

double smoothness_lp(double L, double mu) {
  const double kappa = L / mu;
  return L * std::sqrt(4.0 * kappa * kappa + 1.0);
}

double smoothness_lq(double L, double mu) { return smoothness_lp(L, mu); }

StepSizes theory_steps_spider(double L, double mu, double rho) {
  if (L <= 0.0 || mu <= 0.0 || rho < 0.0 || rho >= 1.0)
    throw numeric_error("theory steps need L > 0, mu > 0 and rho in [0, 1)");
  const double k = L / mu;
  const double LP = smoothness_lp(L, mu);
  const double om = 1.0 - rho;
  StepSizes s;
  s.mode = "theory";
  s.eta_y = 1.0 / (4.0 * L);
  s.eta_x = std::min(om * om / (180.0 * LP),
                     1.0 / (20.0 * (L + 1.0) * (12.0 * k * k + 2.0 * k + 5.0)));
  const double c = 12.0 * k * k + k + 1.0;
  s.eta_lambda =
      std::min(5.0 * LP * om * om / (24.0 * L * L * c),
               1.0 / (2.0 * LP + 128.0 * L * k * k +
                      (L + 1.0) * (20.0 * k * k + k + 1.0) / 2.0 +
                      4.0 * L * L * c / (30.0 * LP)));
  return s;
}

StepSizes theory_steps_storm(double L, double mu, double rho, double sigma,
                             double eps) {
  if (L <= 0.0 || mu <= 0.0 || rho < 0.0 || rho >= 1.0)
    throw numeric_error("theory steps need L > 0, mu > 0 and rho in [0, 1)");
  if (sigma <= 0.0 || eps <= 0.0)
    throw numeric_error("STORM theory steps need sigma > 0 and eps > 0");
  const double k = L / mu;
  const double om = 1.0 - rho;
  if (eps > sigma * om * om)
    std::cerr << "[vrlm] warning: eps > sigma*(1-rho)^2, outside the analyzed "
                 "regime\n";
  StepSizes s;
  s.mode = "theory";
  s.beta = eps * eps / (1440.0 * sigma * sigma * (24.0 * k * k + 7.0 * k + 4.0));
  const double sqb = std::sqrt(s.beta);
  s.eta_y = sqb / (4.0 * std::sqrt(2.0) * L);
  s.eta_x = std::min(k * om * om / (40.0 * L * (24.0 * k * k + 8.0 * k + 5.0)),
                     sqb / (48.0 * (L + 1.0) * (24.0 * k * k + 7.0 * k + 4.0)));
  s.eta_lambda =
      std::min(om * om / (4.0 * L * (20.0 * k + 3.0)),
               sqb / (4.0 * (L + 1.0) * (52.0 * k * k + k + 1.0)));
  return s;
}

long storm_initial_batch(double L, double mu, double rho, double sigma,
                         double beta) {
  if (beta <= 0.0 || beta > 1.0)
    throw numeric_error("STORM momentum must lie in (0, 1]");
  const double k = L / mu;
  const double om = 1.0 - rho;
  const double raw = (1.0 / (std::sqrt(beta) * L) +
                      1.0 / (4.0 * om * om * k * L)) *
                     sigma * sigma;
  return std::max(1L, static_cast<long>(std::ceil(raw)));
}

double storm_upsilon(double sigma, long batch) {
  if (batch < 1) throw numeric_error("batch size must be positive");
  return sigma * sigma / static_cast<double>(batch);
}

IterateDiag vrlm_iterate(SwarmState& s, const ProblemOracle& p,
                         const MixingMatrix& W,
                         std::vector<Estimator>& estimators,
                         const StepSizes& steps) {
  const int m = p.agents();
  const double L = p.smoothness();
  const double sqm = std::sqrt(static_cast<double>(m));
  const Eigen::MatrixXd& Wm = W.weights();

  IterateDiag diag;
  diag.x_perp2_before = consensus_sq(s.X);

  Eigen::MatrixXd Dx_new(m, p.primal_dim()), Dy_new(m, p.dual_dim());
  Eigen::VectorXd dx(p.primal_dim()), dy(p.dual_dim());
  long per_agent = 0;
  for (int i = 0; i < m; ++i) {
    per_agent = estimators[i].step(p, i, s.t + 1, s.X.row(i).transpose(),
                                   s.Y.row(i).transpose(), dx, dy);
    Dx_new.row(i) = dx.transpose();
    Dy_new.row(i) = dy.transpose();
  }

  // One communication round covers the mixing of V_x, W X, and the (W-I)
  // products in the dual and multiplier updates.
  const Eigen::MatrixXd Vx_new = Wm * (s.Vx + Dx_new - s.Dx);
  const Eigen::MatrixXd Vy_new =
      Dy_new - (L * sqm / 2.0) * (Wm.transpose() * s.Lambda - s.Lambda);
  s.Lambda += (L * steps.eta_lambda / (2.0 * sqm)) * (Wm * s.Y - s.Y);
  const Eigen::MatrixXd X_new =
      prox_rows(p.g(), steps.eta_x, Wm * s.X - steps.eta_x * Vx_new);
  const Eigen::MatrixXd Y_new =
      prox_rows(p.h(), steps.eta_y, s.Y + steps.eta_y * Vy_new);

  s.X = X_new;
  s.Y = Y_new;
  s.Dx = Dx_new;
  s.Dy = Dy_new;
  s.Vx = Vx_new;
  s.Vy = Vy_new;
  s.t += 1;
  s.comms += 1;
  s.samples += per_agent;

  diag.x_perp2_after = consensus_sq(s.X);
  const Eigen::RowVectorXd v_mean = Vx_new.colwise().mean();
  diag.v_perp2 = (Vx_new.rowwise() - v_mean).squaredNorm();

  check_divergence(s);
  return diag;
}

IterateDiag sgda_iterate(SwarmState& s, const ProblemOracle& p,
                         const MixingMatrix& W,
                         std::vector<Estimator>& estimators,
                         const StepSizes& steps) {
  const int m = p.agents();
  const Eigen::MatrixXd& Wm = W.weights();

  IterateDiag diag;
  diag.x_perp2_before = consensus_sq(s.X);

  Eigen::MatrixXd Dx_new(m, p.primal_dim()), Dy_new(m, p.dual_dim());
  Eigen::VectorXd dx(p.primal_dim()), dy(p.dual_dim());
  long per_agent = 0;
  for (int i = 0; i < m; ++i) {
    per_agent = estimators[i].step(p, i, s.t + 1, s.X.row(i).transpose(),
                                   s.Y.row(i).transpose(), dx, dy);
    Dx_new.row(i) = dx.transpose();
    Dy_new.row(i) = dy.transpose();
  }

  const Eigen::MatrixXd Vx_new = Wm * (s.Vx + Dx_new - s.Dx);
  const Eigen::MatrixXd X_new =
      prox_rows(p.g(), steps.eta_x, Wm * s.X - steps.eta_x * Vx_new);
  const Eigen::MatrixXd Y_new =
      prox_rows(p.h(), steps.eta_y, Wm * s.Y + steps.eta_y * Dy_new);

  s.X = X_new;
  s.Y = Y_new;
  s.Dx = Dx_new;
  s.Dy = Dy_new;
  s.Vx = Vx_new;
  s.Vy = Dy_new;
  s.t += 1;
  s.comms += 1;
  s.samples += per_agent;

  diag.x_perp2_after = consensus_sq(s.X);
  const Eigen::RowVectorXd v_mean = Vx_new.colwise().mean();
  diag.v_perp2 = (Vx_new.rowwise() - v_mean).squaredNorm();

  check_divergence(s);
  return diag;
}

}  // namespace vrlm
