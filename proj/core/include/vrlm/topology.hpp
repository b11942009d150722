#pragma once

#include <Eigen/Dense>

namespace vrlm {

// Gossip mixing matrix W with its spectral contraction factor
// rho = ||W - (1/m) 11^T||_2. Construction always validates the structural
// conditions: W^T 1 = 1, Null(W - I) = Span{1}, rho < 1, ||W - I||_2 <= 2.
// Immutable after construction; safe to share across threads.
class MixingMatrix {
 public:
  // Validates a raw square matrix and computes rho. Throws topology_error
  // naming the violated condition.
  static MixingMatrix validate(const Eigen::MatrixXd& weights);

  // Ring of m >= 3 agents, self and neighbor weights 1/3.
  static MixingMatrix ring(int m);

  // Complete averaging W = (1/m) 11^T, m >= 1. rho = 0.
  static MixingMatrix complete(int m);

  // W^k, re-validated. For symmetric W, rho(W^k) = rho(W)^k.
  MixingMatrix power(int k) const;

  int size() const { return static_cast<int>(weights_.rows()); }
  const Eigen::MatrixXd& weights() const { return weights_; }
  double rho() const { return rho_; }

  // One gossip round applied to row-stacked agent data: W * X.
  Eigen::MatrixXd mix(const Eigen::MatrixXd& stacked) const {
    return weights_ * stacked;
  }

 private:
  MixingMatrix(Eigen::MatrixXd weights, double rho)
      : weights_(std::move(weights)), rho_(rho) {}

  Eigen::MatrixXd weights_;
  double rho_;
};

}  // namespace vrlm
