#include "vrlm/vr.hpp"

#include <string>
#include <utility>

#include "vrlm/errors.hpp"

namespace vrlm {

Estimator::Estimator(VrConfig config, RngStream rng)
    : config_(config), rng_(std::move(rng)) {
  if (config_.kind == VrKind::Spider) {
    if (config_.q < 1 || config_.S0 < 1 || config_.S1 < 1 || config_.S2 < 1)
      throw config_error("SPIDER batch sizes and period must be positive");
  } else {
    if (config_.beta <= 0.0 || config_.beta > 1.0)
      throw config_error("STORM momentum must lie in (0, 1]");
    if (config_.S0 < 1 || config_.batch < 1)
      throw config_error("STORM batch sizes must be positive");
  }
}

std::vector<long> Estimator::draw_batch(const ProblemOracle& p, long size) {
  // A finite-sum batch of full size is the deterministic pass 0..n-1, which
  // makes the big-batch estimate exact instead of a bootstrap resample.
  if (p.finite_sum()) {
    if (size > p.components())
      throw config_error("batch size exceeds the number of components");
    if (size == p.components()) {
      std::vector<long> all(size);
      for (long i = 0; i < size; ++i) all[i] = i;
      return all;
    }
    return rng_.sample_without_replacement(p.components(), size);
  }
  return rng_.sample_with_replacement(p.components(), size);
}

long Estimator::init(const ProblemOracle& p, int agent,
                     const Eigen::VectorXd& x0, const Eigen::VectorXd& y0,
                     Eigen::VectorXd& dx, Eigen::VectorXd& dy) {
  if (primed_) throw numeric_error("estimator already primed");
  const std::vector<long> batch = draw_batch(p, config_.S0);
  p.stoch_grad(agent, x0, y0, batch, dx, dy);
  prev_x_ = x0;
  prev_y_ = y0;
  prev_dx_ = dx;
  prev_dy_ = dy;
  primed_ = true;
  t_ = 0;
  return static_cast<long>(batch.size());
}

long Estimator::step(const ProblemOracle& p, int agent, long t,
                     const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                     Eigen::VectorXd& dx, Eigen::VectorXd& dy) {
  if (!primed_) throw numeric_error("estimator used before init");
  if (t != t_ + 1)
    throw numeric_error("estimator steps must be sequential (expected t = " +
                        std::to_string(t_ + 1) + ", got " + std::to_string(t) +
                        ")");

  long drawn = 0;
  if (config_.kind == VrKind::Spider) {
    if (t % config_.q == 0) {
      const std::vector<long> batch = draw_batch(p, config_.S1);
      p.stoch_grad(agent, x, y, batch, dx, dy);
      drawn = static_cast<long>(batch.size());
    } else {
      const std::vector<long> batch = draw_batch(p, config_.S2);
      Eigen::VectorXd gx_new(p.primal_dim()), gy_new(p.dual_dim());
      Eigen::VectorXd gx_old(p.primal_dim()), gy_old(p.dual_dim());
      p.stoch_grad(agent, x, y, batch, gx_new, gy_new);
      p.stoch_grad(agent, prev_x_, prev_y_, batch, gx_old, gy_old);
      dx = gx_new - gx_old + prev_dx_;
      dy = gy_new - gy_old + prev_dy_;
      drawn = static_cast<long>(batch.size());
    }
  } else {
    const std::vector<long> batch = draw_batch(p, config_.batch);
    Eigen::VectorXd gx_new(p.primal_dim()), gy_new(p.dual_dim());
    p.stoch_grad(agent, x, y, batch, gx_new, gy_new);
    if (config_.beta == 1.0) {
      dx = gx_new;
      dy = gy_new;
    } else {
      Eigen::VectorXd gx_old(p.primal_dim()), gy_old(p.dual_dim());
      p.stoch_grad(agent, prev_x_, prev_y_, batch, gx_old, gy_old);
      dx = gx_new + (1.0 - config_.beta) * (prev_dx_ - gx_old);
      dy = gy_new + (1.0 - config_.beta) * (prev_dy_ - gy_old);
    }
    drawn = static_cast<long>(batch.size());
  }

  prev_x_ = x;
  prev_y_ = y;
  prev_dx_ = dx;
  prev_dy_ = dy;
  t_ = t;
  return drawn;
}

}  // namespace vrlm
