#include "vrlm/prox.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "vrlm/errors.hpp"

namespace vrlm {

ProxSpec ProxSpec::l1(double weight) {
  if (weight < 0.0 || !std::isfinite(weight))
    throw numeric_error("L1 weight must be finite and nonnegative");
  ProxSpec s;
  s.kind = ProxKind::L1;
  s.weight = weight;
  return s;
}

ProxSpec ProxSpec::simplex(int dim, double total) {
  if (dim < 1) throw numeric_error("simplex dimension must be positive");
  if (total <= 0.0 || !std::isfinite(total))
    throw numeric_error("simplex total must be finite and positive");
  ProxSpec s;
  s.kind = ProxKind::SimplexIndicator;
  s.dim = dim;
  s.total = total;
  return s;
}

double ProxSpec::value(const Eigen::VectorXd& v) const {
  constexpr double inf = std::numeric_limits<double>::infinity();
  switch (kind) {
    case ProxKind::Zero:
      return 0.0;
    case ProxKind::L1:
      return weight * v.lpNorm<1>();
    case ProxKind::SimplexIndicator:
      if (v.minCoeff() < -1e-9 || std::abs(v.sum() - total) > 1e-9) return inf;
      return 0.0;
    case ProxKind::NonnegIndicator:
      return v.minCoeff() < -1e-9 ? inf : 0.0;
  }
  return 0.0;
}

Eigen::VectorXd project_simplex(const Eigen::VectorXd& v, double total) {
  const long d = v.size();
  std::vector<double> u(v.data(), v.data() + d);
  std::sort(u.begin(), u.end(), std::greater<double>());
  // threshold tau = (partial sum - total)/k for the largest valid k
  double cumsum = 0.0;
  double tau = (v.sum() - total) / static_cast<double>(d);
  for (long k = 0; k < d; ++k) {
    cumsum += u[k];
    const double cand = (cumsum - total) / static_cast<double>(k + 1);
    if (k + 1 == d || u[k + 1] <= cand) {
      tau = cand;
      break;
    }
  }
  return (v.array() - tau).max(0.0).matrix();
}

Eigen::VectorXd prox_eval(const ProxSpec& spec, double step,
                          const Eigen::VectorXd& v) {
  if (step <= 0.0 || !std::isfinite(step))
    throw numeric_error("prox step must be finite and positive");
  if (!v.allFinite()) throw numeric_error("prox input is not finite");

  switch (spec.kind) {
    case ProxKind::Zero:
      return v;
    case ProxKind::L1: {
      const double thr = step * spec.weight;
      return v.unaryExpr([thr](double x) {
        if (x > thr) return x - thr;
        if (x < -thr) return x + thr;
        return 0.0;
      });
    }
    case ProxKind::SimplexIndicator:
      if (v.size() != spec.dim)
        throw numeric_error("simplex dimension mismatch: spec dim " +
                            std::to_string(spec.dim) + ", input dim " +
                            std::to_string(v.size()));
      return project_simplex(v, spec.total);
    case ProxKind::NonnegIndicator:
      return v.cwiseMax(0.0);
  }
  return v;
}

Eigen::MatrixXd prox_rows(const ProxSpec& spec, double step,
                          const Eigen::MatrixXd& V) {
  Eigen::MatrixXd out(V.rows(), V.cols());
  for (long i = 0; i < V.rows(); ++i)
    out.row(i) = prox_eval(spec, step, V.row(i).transpose()).transpose();
  return out;
}

}  // namespace vrlm
