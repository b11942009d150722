#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "vrlm/prox.hpp"
#include "vrlm/topology.hpp"

namespace vrlm {

// Local objective oracle for one minimax problem family: exact, component and
// minibatch gradients plus the constants the algorithm and the theoretical
// step-size calculators need. Read-only after construction; concurrent
// evaluation from multiple agents is safe.
class ProblemOracle {
 public:
  virtual ~ProblemOracle() = default;

  int primal_dim() const { return d1_; }
  int dual_dim() const { return d2_; }
  int agents() const { return m_; }
  long components() const { return n_; }
  bool finite_sum() const { return finite_sum_; }

  // Joint smoothness constant. This is the L baked into Phi, so an override
  // set here is used consistently in both the dynamics and the metrics.
  double smoothness() const { return L_; }
  double strong_concavity() const { return mu_; }
  double variance_bound() const { return sigma2_; }
  double condition_number() const { return L_ / mu_; }

  const ProxSpec& g() const { return g_spec_; }
  const ProxSpec& h() const { return h_spec_; }

  void set_smoothness_override(double L);
  void set_variance_override(double sigma2);

  // Exact local gradient of f_i at (x, y). For finite-sum problems this
  // equals the average of the component gradients.
  void exact_grad(int agent, const Eigen::VectorXd& x,
                  const Eigen::VectorXd& y, Eigen::VectorXd& gx,
                  Eigen::VectorXd& gy) const;

  // Gradient of one finite-sum component / sample scenario.
  virtual void component_grad(int agent, long component,
                              const Eigen::VectorXd& x,
                              const Eigen::VectorXd& y, Eigen::VectorXd& gx,
                              Eigen::VectorXd& gy) const = 0;

  // Minibatch gradient (1/|B|) sum over the batch of component gradients.
  void stoch_grad(int agent, const Eigen::VectorXd& x,
                  const Eigen::VectorXd& y, std::span<const long> batch,
                  Eigen::VectorXd& gx, Eigen::VectorXd& gy) const;

  double objective(int agent, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& y) const {
    return objective_impl(agent, x, y);
  }

  // Per-agent maximizer of the tilted dual subproblem
  //   max_y  f_i(x, y) - h(y) - <tilt, y>,
  // which is the row-i block of S_Phi when tilt = (L*sqrt(m)/2)[(W-I)^T Lam]_i.
  virtual bool has_closed_form_argmax() const { return false; }
  virtual Eigen::VectorXd argmax_dual_closed_form(
      int agent, const Eigen::VectorXd& x, const Eigen::VectorXd& tilt) const;
  Eigen::VectorXd argmax_dual_iterative(int agent, const Eigen::VectorXd& x,
                                        const Eigen::VectorXd& tilt,
                                        double tol = 1e-10,
                                        long max_iters = 100000) const;

 protected:
  ProblemOracle(int m, int d1, int d2, long n, double mu, bool finite_sum)
      : m_(m), d1_(d1), d2_(d2), n_(n), mu_(mu), finite_sum_(finite_sum) {}

  virtual void exact_grad_impl(int agent, const Eigen::VectorXd& x,
                               const Eigen::VectorXd& y, Eigen::VectorXd& gx,
                               Eigen::VectorXd& gy) const = 0;
  virtual double objective_impl(int agent, const Eigen::VectorXd& x,
                                const Eigen::VectorXd& y) const = 0;

  // Max sample variance of component gradients over random probe points;
  // used when sigma^2 is not supplied by the user.
  double estimate_sigma2(std::uint64_t seed, int probes = 1000) const;

  int m_, d1_, d2_;
  long n_;
  double mu_;
  double L_ = 0.0;
  double sigma2_ = 0.0;
  bool finite_sum_;
  ProxSpec g_spec_;
  ProxSpec h_spec_;
};

// S_Phi(X, Lambda): row-stacked argmax of Phi(X, Lambda, .). Uses the closed
// form when the oracle has one, otherwise projected gradient ascent.
Eigen::MatrixXd inner_argmax(const ProblemOracle& p, const MixingMatrix& W,
                             const Eigen::MatrixXd& X,
                             const Eigen::MatrixXd& Lambda,
                             bool force_iterative = false, double tol = 1e-10,
                             long max_iters = 100000);

// Quadratic nonconvex strongly-concave test family:
//   f_i(x,y) = x'A_i x / 2 + x'B_i y + a_i'x + b_i'y - (mu/2)||y||^2
// with n additive zero-mean perturbations of (A_i, B_i, a_i, b_i) as the
// stochastic components. The dual argmax has a closed form, which makes the
// stationarity measure exactly computable.
class QuadraticNCSC : public ProblemOracle {
 public:
  struct AgentData {
    Eigen::MatrixXd A;  // d1 x d1 symmetric, possibly indefinite
    Eigen::MatrixXd B;  // d1 x d2
    Eigen::VectorXd a;  // d1
    Eigen::VectorXd b;  // d2
  };

  QuadraticNCSC(std::vector<AgentData> nominal,
                std::vector<std::vector<AgentData>> perturbations, double mu,
                bool finite_sum = true);

  // Random instance; noise_scale = 0 disables perturbations (sigma^2 = 0).
  static std::unique_ptr<QuadraticNCSC> random(int m, int d1, int d2, long n,
                                               double mu, double noise_scale,
                                               std::uint64_t seed,
                                               bool finite_sum = true);

  void set_g(const ProxSpec& g) { g_spec_ = g; }
  void set_h(const ProxSpec& h) { h_spec_ = h; }

  const AgentData& nominal(int agent) const { return nominal_[agent]; }

  bool has_closed_form_argmax() const override {
    return h_spec_.kind == ProxKind::Zero;
  }
  Eigen::VectorXd argmax_dual_closed_form(
      int agent, const Eigen::VectorXd& x,
      const Eigen::VectorXd& tilt) const override;

  void component_grad(int agent, long component, const Eigen::VectorXd& x,
                      const Eigen::VectorXd& y, Eigen::VectorXd& gx,
                      Eigen::VectorXd& gy) const override;

 protected:
  void exact_grad_impl(int agent, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& y, Eigen::VectorXd& gx,
                       Eigen::VectorXd& gy) const override;
  double objective_impl(int agent, const Eigen::VectorXd& x,
                        const Eigen::VectorXd& y) const override;

 private:
  std::vector<AgentData> nominal_;
  std::vector<std::vector<AgentData>> perturbations_;  // zero-mean per agent
};

// Binary-label dataset with features in R^{d1}.
struct Dataset {
  Eigen::MatrixXd features;  // rows x d1
  Eigen::VectorXd labels;    // +1 / -1
  long rows() const { return features.rows(); }
};

// CSV with header "label,f0,f1,...". Parse failures name the 1-based data row.
Dataset load_dataset_csv(const std::string& path);
// Packed little-endian doubles, each row [label, f0, ..., f_{d1-1}].
Dataset load_dataset_binary(const std::string& path, int d1);
Dataset load_dataset(const std::string& path, const std::string& format,
                     int d1 = 0);

// Two Gaussian blobs, linearly separable structure, labels +/-1.
Dataset make_two_blobs(long rows, int d1, std::uint64_t seed);

// Deterministic shuffled split into m equal shards; remainder rows are
// dropped with a warning on stderr.
std::vector<Dataset> partition_dataset(const Dataset& data, int m,
                                       std::uint64_t seed);

// Sparse distributionally robust logistic regression: per agent
//   f_i(x, y) = m * sum_j y_j * log(1 + exp(-b_j a_j'x))
//               - (mu/2) ||y - 1/N||^2
// with y_i the agent's local sample weights, g = lambda_reg ||.||_1 and h the
// indicator of the scaled local simplex {y >= 0, y'1 = 1/m}.
class DROLogistic : public ProblemOracle {
 public:
  DROLogistic(std::vector<Dataset> shards, double mu, double lambda_reg);

  void component_grad(int agent, long component, const Eigen::VectorXd& x,
                      const Eigen::VectorXd& y, Eigen::VectorXd& gx,
                      Eigen::VectorXd& gy) const override;

  const Dataset& shard(int agent) const { return shards_[agent]; }
  long total_samples() const { return N_; }
  double lambda_reg() const { return lambda_reg_; }

 protected:
  void exact_grad_impl(int agent, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& y, Eigen::VectorXd& gx,
                       Eigen::VectorXd& gy) const override;
  double objective_impl(int agent, const Eigen::VectorXd& x,
                        const Eigen::VectorXd& y) const override;

 private:
  std::vector<Dataset> shards_;
  long N_;
  double lambda_reg_;
};

}  // namespace vrlm
