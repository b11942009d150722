#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "vrlm/problems.hpp"
#include "vrlm/rng.hpp"

namespace vrlm {

enum class VrKind { Spider, Storm };

struct VrConfig {
  VrKind kind = VrKind::Spider;
  long q = 10;        // SPIDER checkpoint period
  long S0 = 1;        // initial batch size
  long S1 = 1;        // SPIDER big-batch size (finite-sum: n)
  long S2 = 1;        // SPIDER small-batch size
  double beta = 0.01; // STORM momentum, in (0, 1]
  long batch = 1;     // STORM per-step batch size S_t
};

// Variance-reduced gradient estimator for one agent. Owns the agent's RNG
// stream and the previous iterate/estimate needed by the recursions.
// Steps for distinct agents may run in parallel; within one agent, steps are
// strictly sequential.
class Estimator {
 public:
  Estimator(VrConfig config, RngStream rng);

  // d^(0) = G^(0)(B_0) with |B_0| = S0; primes the state with (x0, y0, d^(0)).
  // Returns the number of samples drawn.
  long init(const ProblemOracle& p, int agent, const Eigen::VectorXd& x0,
            const Eigen::VectorXd& y0, Eigen::VectorXd& dx,
            Eigen::VectorXd& dy);

  // Advances the estimator to global iteration t (t >= 1) at (x, y) and
  // writes d^(t). SPIDER: big batch when t mod q == 0, otherwise the
  // correction G^(t)(B) - G^(t-1)(B) + d^(t-1) with the same samples at both
  // iterates. STORM: G^(t)(B) + (1-beta)(d^(t-1) - G^(t-1)(B)).
  // Returns the number of samples drawn.
  long step(const ProblemOracle& p, int agent, long t,
            const Eigen::VectorXd& x, const Eigen::VectorXd& y,
            Eigen::VectorXd& dx, Eigen::VectorXd& dy);

  const VrConfig& config() const { return config_; }
  bool primed() const { return primed_; }
  long iteration() const { return t_; }

 private:
  std::vector<long> draw_batch(const ProblemOracle& p, long size);

  VrConfig config_;
  RngStream rng_;
  bool primed_ = false;
  long t_ = 0;
  Eigen::VectorXd prev_x_, prev_y_, prev_dx_, prev_dy_;
};

}  // namespace vrlm
