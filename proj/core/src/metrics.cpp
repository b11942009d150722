#include "vrlm/metrics.hpp"

#include <cmath>

#include "vrlm/prox.hpp"

namespace vrlm {

namespace {

double consensus_sq(const Eigen::MatrixXd& M) {
  const Eigen::RowVectorXd mean = M.colwise().mean();
  return (M.rowwise() - mean).squaredNorm();
}

// Row-stacked per-agent dual maximizers of f_i(xbar, .) - h with no tilt.
Eigen::MatrixXd untilted_argmax(const ProblemOracle& p,
                                const Eigen::VectorXd& xbar) {
  const int m = p.agents();
  const Eigen::VectorXd zero_tilt = Eigen::VectorXd::Zero(p.dual_dim());
  Eigen::MatrixXd Y(m, p.dual_dim());
  for (int i = 0; i < m; ++i)
    Y.row(i) = (p.has_closed_form_argmax()
                    ? p.argmax_dual_closed_form(i, xbar, zero_tilt)
                    : p.argmax_dual_iterative(i, xbar, zero_tilt))
                   .transpose();
  return Y;
}

Eigen::VectorXd mean_primal_grad(const ProblemOracle& p,
                                 const Eigen::VectorXd& xbar,
                                 const Eigen::MatrixXd& Ystar) {
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(p.primal_dim());
  Eigen::VectorXd gx(p.primal_dim()), gy(p.dual_dim());
  for (int i = 0; i < p.agents(); ++i) {
    p.exact_grad(i, xbar, Ystar.row(i).transpose(), gx, gy);
    grad += gx;
  }
  return grad / static_cast<double>(p.agents());
}

}  // namespace

StationarityReport stationarity(const SwarmState& s, const ProblemOracle& p,
                                const MixingMatrix& W, double eta_x) {
  const int m = p.agents();
  const double L = p.smoothness();
  StationarityReport r;

  const Eigen::VectorXd xbar = s.X.colwise().mean().transpose();
  const Eigen::MatrixXd Xbar =
      Eigen::VectorXd::Ones(m) * xbar.transpose();

  // Yhat = S_Phi(1 xbar', Lambda) enters both primal and multiplier terms.
  const Eigen::MatrixXd Yhat = inner_argmax(p, W, Xbar, s.Lambda);
  const Eigen::VectorXd grad = mean_primal_grad(p, xbar, Yhat);
  const Eigen::VectorXd moved =
      prox_eval(p.g(), eta_x, xbar - eta_x * grad);
  r.prox_grad_norm2 = ((xbar - moved) / eta_x).squaredNorm();
  r.consensus_term = (L * L / static_cast<double>(m)) * consensus_sq(s.X);

  const double scale = L / (2.0 * std::sqrt(static_cast<double>(m)));
  r.lambda_grad_norm2 =
      (scale * (W.weights() * Yhat - Yhat)).squaredNorm();

  const Eigen::MatrixXd Ytilde = inner_argmax(p, W, s.X, s.Lambda);
  r.y_gap = (Ytilde - s.Y).squaredNorm();

  Eigen::VectorXd gx(p.primal_dim()), gy(p.dual_dim());
  double residual = 0.0;
  for (int i = 0; i < m; ++i) {
    p.exact_grad(i, s.X.row(i).transpose(), s.Y.row(i).transpose(), gx, gy);
    residual += (s.Dx.row(i).transpose() - gx).squaredNorm() +
                (s.Dy.row(i).transpose() - gy).squaredNorm();
  }
  r.tracking_residual = residual;

  const Eigen::RowVectorXd v_mean = s.Vx.colwise().mean();
  r.v_consensus = (s.Vx.rowwise() - v_mean).squaredNorm();
  r.samples_so_far = s.samples;
  r.comms_so_far = s.comms;
  return r;
}

double experiment_metric_dro(const SwarmState& s, const ProblemOracle& p,
                             bool unit_step, double eta_x) {
  const Eigen::VectorXd xbar = s.X.colwise().mean().transpose();
  const Eigen::MatrixXd Ystar = untilted_argmax(p, xbar);
  const Eigen::VectorXd grad = mean_primal_grad(p, xbar, Ystar);
  const double step = unit_step ? 1.0 : eta_x;
  const Eigen::VectorXd moved = prox_eval(p.g(), step, xbar - step * grad);
  return (xbar - moved).squaredNorm() + consensus_sq(s.X) + consensus_sq(s.Y);
}

double per_agent_metric_fair(const SwarmState& s, const ProblemOracle& p) {
  const Eigen::VectorXd xbar = s.X.colwise().mean().transpose();
  const Eigen::MatrixXd Ystar = untilted_argmax(p, xbar);
  const Eigen::VectorXd grad = mean_primal_grad(p, xbar, Ystar);
  return grad.squaredNorm() + consensus_sq(s.X) + consensus_sq(s.Y);
}

double objective_estimate(const SwarmState& s, const ProblemOracle& p) {
  double val = 0.0;
  for (int i = 0; i < p.agents(); ++i) {
    const Eigen::VectorXd xi = s.X.row(i).transpose();
    val += p.objective(i, xi, s.Y.row(i).transpose()) + p.g().value(xi);
  }
  return val / static_cast<double>(p.agents());
}

}  // namespace vrlm
