#include "vrlm/topology.hpp"

#include <cmath>
#include <string>

#include "vrlm/errors.hpp"

namespace vrlm {

namespace {

constexpr double kStructTol = 1e-10;

double spectral_norm(const Eigen::MatrixXd& M) {
  if (M.isApprox(M.transpose(), 1e-12)) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
    return es.eigenvalues().cwiseAbs().maxCoeff();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  return svd.singularValues()(0);
}

double compute_rho(const Eigen::MatrixXd& W) {
  const long m = W.rows();
  const Eigen::MatrixXd centered =
      W - Eigen::MatrixXd::Constant(m, m, 1.0 / static_cast<double>(m));
  return spectral_norm(centered);
}

}  // namespace

MixingMatrix MixingMatrix::validate(const Eigen::MatrixXd& weights) {
  if (weights.rows() != weights.cols() || weights.rows() < 1)
    throw topology_error("mixing matrix must be square and nonempty");
  if (!weights.allFinite())
    throw topology_error("mixing matrix has non-finite entries");

  const long m = weights.rows();
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(m);

  const double col_sum_err = (weights.transpose() * ones - ones).cwiseAbs().maxCoeff();
  if (col_sum_err > kStructTol)
    throw topology_error("column sums violate W^T 1 = 1 (max error " +
                         std::to_string(col_sum_err) + ")");

  const Eigen::MatrixXd WmI = weights - Eigen::MatrixXd::Identity(m, m);

  // Null(W - I) = Span{1}: the ones vector is in the null space and the
  // second-smallest singular value is bounded away from zero.
  const double ones_residual = (WmI * ones).norm() / std::sqrt(double(m));
  if (ones_residual > kStructTol)
    throw topology_error("ones vector is not in Null(W - I) (residual " +
                         std::to_string(ones_residual) + ")");
  if (m > 1) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(WmI);
    const double second_smallest = svd.singularValues()(m - 2);
    if (second_smallest <= kStructTol)
      throw topology_error("Null(W - I) is larger than Span{1}");
  }

  const double wmi_norm = spectral_norm(WmI);
  if (wmi_norm > 2.0 + kStructTol)
    throw topology_error("||W - I||_2 = " + std::to_string(wmi_norm) +
                         " exceeds 2");

  const double rho = compute_rho(weights);
  if (rho >= 1.0)
    throw topology_error("rho = " + std::to_string(rho) + " is not below 1");

  return MixingMatrix(weights, rho);
}

MixingMatrix MixingMatrix::ring(int m) {
  if (m < 3) throw topology_error("ring topology requires m >= 3");
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    W(i, i) = 1.0 / 3.0;
    W(i, (i + 1) % m) += 1.0 / 3.0;
    W(i, (i + m - 1) % m) += 1.0 / 3.0;
  }
  return validate(W);
}

MixingMatrix MixingMatrix::complete(int m) {
  if (m < 1) throw topology_error("complete topology requires m >= 1");
  const Eigen::MatrixXd W =
      Eigen::MatrixXd::Constant(m, m, 1.0 / static_cast<double>(m));
  return validate(W);
}

MixingMatrix MixingMatrix::power(int k) const {
  if (k < 1) throw topology_error("mixing power must be >= 1");
  Eigen::MatrixXd Wk = weights_;
  for (int i = 1; i < k; ++i) Wk = Wk * weights_;
  return validate(Wk);
}

}  // namespace vrlm
