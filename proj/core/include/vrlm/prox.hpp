#pragma once

#include <Eigen/Dense>

namespace vrlm {

enum class ProxKind {
  Zero,             // no regularizer, prox is the identity
  L1,               // weight * ||.||_1, componentwise soft threshold
  SimplexIndicator, // projection onto {y >= 0, y^T 1 = total}
  NonnegIndicator,  // componentwise max(., 0)
};

// Closed convex regularizer with a closed-form proximal mapping.
// Applied row-wise when the argument is a stacked matrix.
struct ProxSpec {
  ProxKind kind = ProxKind::Zero;
  double weight = 0.0; // L1 only, >= 0
  int dim = 0;         // simplex only, must match the variable dimension
  double total = 1.0;  // simplex mass (1 for the standard simplex)

  static ProxSpec zero() { return {}; }
  static ProxSpec l1(double weight);
  static ProxSpec simplex(int dim, double total = 1.0);
  static ProxSpec nonneg() { return {ProxKind::NonnegIndicator, 0.0, 0, 1.0}; }

  // Regularizer value at v (0 for indicators of feasible points; indicator
  // infeasibility is not representable and reported as +inf).
  double value(const Eigen::VectorXd& v) const;
};

// argmin_y { r(y) + (1/(2*step)) ||y - v||^2 } for the supported kinds.
Eigen::VectorXd prox_eval(const ProxSpec& spec, double step,
                          const Eigen::VectorXd& v);

// prox_eval applied independently to each row of V.
Eigen::MatrixXd prox_rows(const ProxSpec& spec, double step,
                          const Eigen::MatrixXd& V);

// Euclidean projection onto {y >= 0, y^T 1 = total} by the sort-based
// threshold method.
Eigen::VectorXd project_simplex(const Eigen::VectorXd& v, double total = 1.0);

}  // namespace vrlm
