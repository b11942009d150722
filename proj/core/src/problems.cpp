#include "vrlm/problems.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "vrlm/errors.hpp"
#include "vrlm/rng.hpp"

namespace vrlm {

namespace {

void require_finite(const Eigen::VectorXd& v, const char* what) {
  if (!v.allFinite())
    throw numeric_error(std::string(what) + " contains non-finite values");
}

// log(1 + exp(z)) without overflow
double log1pexp(double z) {
  if (z > 35.0) return z;
  return std::log1p(std::exp(z));
}

// d/dz log(1 + exp(-z)) = -1/(1 + exp(z))
double logistic_loss_deriv(double z) { return -1.0 / (1.0 + std::exp(z)); }

}  // namespace

void ProblemOracle::set_smoothness_override(double L) {
  if (L <= 0.0 || !std::isfinite(L))
    throw numeric_error("smoothness override must be finite and positive");
  L_ = L;
}

void ProblemOracle::set_variance_override(double sigma2) {
  if (sigma2 < 0.0 || !std::isfinite(sigma2))
    throw numeric_error("variance override must be finite and nonnegative");
  sigma2_ = sigma2;
}

void ProblemOracle::exact_grad(int agent, const Eigen::VectorXd& x,
                               const Eigen::VectorXd& y, Eigen::VectorXd& gx,
                               Eigen::VectorXd& gy) const {
  require_finite(x, "primal input");
  require_finite(y, "dual input");
  exact_grad_impl(agent, x, y, gx, gy);
  require_finite(gx, "primal gradient");
  require_finite(gy, "dual gradient");
}

void ProblemOracle::stoch_grad(int agent, const Eigen::VectorXd& x,
                               const Eigen::VectorXd& y,
                               std::span<const long> batch,
                               Eigen::VectorXd& gx, Eigen::VectorXd& gy) const {
  if (batch.empty()) throw numeric_error("stoch_grad: empty batch");
  require_finite(x, "primal input");
  require_finite(y, "dual input");
  gx = Eigen::VectorXd::Zero(d1_);
  gy = Eigen::VectorXd::Zero(d2_);
  Eigen::VectorXd cx(d1_), cy(d2_);
  for (long idx : batch) {
    component_grad(agent, idx, x, y, cx, cy);
    gx += cx;
    gy += cy;
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  gx *= inv;
  gy *= inv;
}

Eigen::VectorXd ProblemOracle::argmax_dual_closed_form(
    int, const Eigen::VectorXd&, const Eigen::VectorXd&) const {
  throw oracle_error("no closed-form dual maximizer for this problem", 0.0);
}

Eigen::VectorXd ProblemOracle::argmax_dual_iterative(
    int agent, const Eigen::VectorXd& x, const Eigen::VectorXd& tilt,
    double tol, long max_iters) const {
  // The dual curvature of both families is exactly mu, so a step of
  // 1/max(L, mu) is always stable even when L is a user override below mu.
  const double step = 1.0 / std::max(L_, mu_);
  Eigen::VectorXd y;
  switch (h_spec_.kind) {
    case ProxKind::SimplexIndicator:
      y = Eigen::VectorXd::Constant(d2_, h_spec_.total / d2_);
      break;
    default:
      y = Eigen::VectorXd::Zero(d2_);
  }
  Eigen::VectorXd gx(d1_), gy(d2_);
  double update_norm = 0.0;
  for (long it = 0; it < max_iters; ++it) {
    exact_grad_impl(agent, x, y, gx, gy);
    Eigen::VectorXd y_next = prox_eval(h_spec_, step, y + step * (gy - tilt));
    update_norm = (y_next - y).norm();
    y = std::move(y_next);
    if (update_norm < tol) return y;
  }
  throw oracle_error("dual maximizer did not converge (residual " +
                         std::to_string(update_norm) + ")",
                     update_norm);
}

double ProblemOracle::estimate_sigma2(std::uint64_t seed, int probes) const {
  if (n_ <= 1) return 0.0;
  RngStream rng(seed, 0x51931ULL);
  Eigen::VectorXd gx(d1_), gy(d2_), cx(d1_), cy(d2_);
  double worst = 0.0;
  for (int pr = 0; pr < probes; ++pr) {
    const int agent = static_cast<int>(rng.next_below(m_));
    Eigen::VectorXd x(d1_), y(d2_);
    for (int i = 0; i < d1_; ++i) x(i) = rng.next_gaussian();
    for (int i = 0; i < d2_; ++i) y(i) = rng.next_gaussian();
    if (h_spec_.kind == ProxKind::SimplexIndicator)
      y = project_simplex(y.cwiseAbs() * (h_spec_.total / d2_), h_spec_.total);
    exact_grad_impl(agent, x, y, gx, gy);
    double var = 0.0;
    for (long j = 0; j < n_; ++j) {
      component_grad(agent, j, x, y, cx, cy);
      var += (cx - gx).squaredNorm() + (cy - gy).squaredNorm();
    }
    var /= static_cast<double>(n_);
    worst = std::max(worst, var);
  }
  return worst;
}

Eigen::MatrixXd inner_argmax(const ProblemOracle& p, const MixingMatrix& W,
                             const Eigen::MatrixXd& X,
                             const Eigen::MatrixXd& Lambda,
                             bool force_iterative, double tol,
                             long max_iters) {
  const int m = p.agents();
  const double scale = p.smoothness() * std::sqrt(double(m)) / 2.0;
  const Eigen::MatrixXd tilt =
      scale * (W.weights().transpose() * Lambda - Lambda);
  Eigen::MatrixXd Y(m, p.dual_dim());
  const bool closed = p.has_closed_form_argmax() && !force_iterative;
  for (int i = 0; i < m; ++i) {
    const Eigen::VectorXd xi = X.row(i).transpose();
    const Eigen::VectorXd ci = tilt.row(i).transpose();
    Y.row(i) = (closed ? p.argmax_dual_closed_form(i, xi, ci)
                       : p.argmax_dual_iterative(i, xi, ci, tol, max_iters))
                   .transpose();
  }
  return Y;
}

// ---------------------------------------------------------------------------
// QuadraticNCSC

QuadraticNCSC::QuadraticNCSC(std::vector<AgentData> nominal,
                             std::vector<std::vector<AgentData>> perturbations,
                             double mu, bool finite_sum)
    : ProblemOracle(static_cast<int>(nominal.size()),
                    static_cast<int>(nominal.at(0).A.rows()),
                    static_cast<int>(nominal.at(0).B.cols()),
                    perturbations.empty()
                        ? 1
                        : static_cast<long>(perturbations.at(0).size()),
                    mu, finite_sum),
      nominal_(std::move(nominal)),
      perturbations_(std::move(perturbations)) {
  if (mu <= 0.0) throw numeric_error("mu must be positive");
  if (perturbations_.empty())
    perturbations_.assign(
        m_, std::vector<AgentData>(
                1, AgentData{Eigen::MatrixXd::Zero(d1_, d1_),
                             Eigen::MatrixXd::Zero(d1_, d2_),
                             Eigen::VectorXd::Zero(d1_),
                             Eigen::VectorXd::Zero(d2_)}));

  // Center the perturbations so that the component average is exactly the
  // nominal data.
  bool any_noise = false;
  for (auto& per_agent : perturbations_) {
    AgentData mean{Eigen::MatrixXd::Zero(d1_, d1_),
                   Eigen::MatrixXd::Zero(d1_, d2_), Eigen::VectorXd::Zero(d1_),
                   Eigen::VectorXd::Zero(d2_)};
    for (const auto& c : per_agent) {
      mean.A += c.A;
      mean.B += c.B;
      mean.a += c.a;
      mean.b += c.b;
    }
    const double inv = 1.0 / static_cast<double>(per_agent.size());
    mean.A *= inv;
    mean.B *= inv;
    mean.a *= inv;
    mean.b *= inv;
    for (auto& c : per_agent) {
      c.A -= mean.A;
      c.B -= mean.B;
      c.a -= mean.a;
      c.b -= mean.b;
      if (c.A.cwiseAbs().maxCoeff() > 0 || c.B.cwiseAbs().maxCoeff() > 0 ||
          c.a.cwiseAbs().maxCoeff() > 0 || c.b.cwiseAbs().maxCoeff() > 0)
        any_noise = true;
    }
  }

  // L = max_i || [[A_i, B_i], [B_i', -mu I]] ||_2
  double L = mu;
  for (const auto& d : nominal_) {
    Eigen::MatrixXd H(d1_ + d2_, d1_ + d2_);
    H.topLeftCorner(d1_, d1_) = d.A;
    H.topRightCorner(d1_, d2_) = d.B;
    H.bottomLeftCorner(d2_, d1_) = d.B.transpose();
    H.bottomRightCorner(d2_, d2_) =
        -mu * Eigen::MatrixXd::Identity(d2_, d2_);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    L = std::max(L, es.eigenvalues().cwiseAbs().maxCoeff());
  }
  L_ = L;
  sigma2_ = any_noise ? estimate_sigma2(/*seed=*/12345) : 0.0;
}

std::unique_ptr<QuadraticNCSC> QuadraticNCSC::random(int m, int d1, int d2,
                                                     long n, double mu,
                                                     double noise_scale,
                                                     std::uint64_t seed,
                                                     bool finite_sum) {
  RngStream rng(seed, 0x9ad0ULL);
  auto gauss_mat = [&](int r, int c, double scale) {
    Eigen::MatrixXd M(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) M(i, j) = scale * rng.next_gaussian();
    return M;
  };
  std::vector<AgentData> nominal(m);
  std::vector<std::vector<AgentData>> perts(m);
  for (int i = 0; i < m; ++i) {
    Eigen::MatrixXd M = gauss_mat(d1, d1, 1.0 / std::sqrt(double(d1)));
    nominal[i].A = 0.5 * (M + M.transpose());
    nominal[i].B = gauss_mat(d1, d2, 1.0 / std::sqrt(double(d2)));
    nominal[i].a = gauss_mat(d1, 1, 1.0);
    nominal[i].b = gauss_mat(d2, 1, 1.0);
    perts[i].resize(n);
    for (long j = 0; j < n; ++j) {
      perts[i][j].A = gauss_mat(d1, d1, noise_scale);
      perts[i][j].A = 0.5 * (perts[i][j].A + perts[i][j].A.transpose());
      perts[i][j].B = gauss_mat(d1, d2, noise_scale);
      perts[i][j].a = gauss_mat(d1, 1, noise_scale);
      perts[i][j].b = gauss_mat(d2, 1, noise_scale);
    }
  }
  return std::make_unique<QuadraticNCSC>(std::move(nominal), std::move(perts),
                                         mu, finite_sum);
}

Eigen::VectorXd QuadraticNCSC::argmax_dual_closed_form(
    int agent, const Eigen::VectorXd& x, const Eigen::VectorXd& tilt) const {
  // First-order condition of the tilted concave quadratic:
  //   B'x + b - mu*y - tilt = 0
  const auto& d = nominal_[agent];
  return (d.B.transpose() * x + d.b - tilt) / mu_;
}

void QuadraticNCSC::component_grad(int agent, long component,
                                   const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& y,
                                   Eigen::VectorXd& gx,
                                   Eigen::VectorXd& gy) const {
  const auto& d = nominal_[agent];
  const auto& c = perturbations_[agent][component];
  gx = (d.A + c.A) * x + (d.B + c.B) * y + d.a + c.a;
  gy = (d.B + c.B).transpose() * x + d.b + c.b - mu_ * y;
}

void QuadraticNCSC::exact_grad_impl(int agent, const Eigen::VectorXd& x,
                                    const Eigen::VectorXd& y,
                                    Eigen::VectorXd& gx,
                                    Eigen::VectorXd& gy) const {
  const auto& d = nominal_[agent];
  gx = d.A * x + d.B * y + d.a;
  gy = d.B.transpose() * x + d.b - mu_ * y;
}

double QuadraticNCSC::objective_impl(int agent, const Eigen::VectorXd& x,
                                     const Eigen::VectorXd& y) const {
  const auto& d = nominal_[agent];
  return 0.5 * x.dot(d.A * x) + x.dot(d.B * y) + d.a.dot(x) + d.b.dot(y) -
         0.5 * mu_ * y.squaredNorm();
}

// ---------------------------------------------------------------------------
// Datasets

Dataset load_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ingestion_error("cannot open dataset file: " + path);
  std::string line;
  if (!std::getline(in, line))
    throw ingestion_error("empty dataset file: " + path);
  long cols = static_cast<long>(std::count(line.begin(), line.end(), ',')) + 1;
  if (cols < 2 || line.rfind("label,", 0) != 0)
    throw ingestion_error("bad CSV header, expected \"label,f0,f1,...\"");
  const long d1 = cols - 1;

  std::vector<double> values;
  long rows = 0;
  long row_no = 0;
  while (std::getline(in, line)) {
    ++row_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    long got = 0;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument(cell);
        values.push_back(v);
      } catch (const std::exception&) {
        throw ingestion_error("parse failure at data row " +
                              std::to_string(row_no) + ": \"" + cell + "\"");
      }
      ++got;
    }
    if (got != cols)
      throw ingestion_error("wrong field count at data row " +
                            std::to_string(row_no));
    ++rows;
  }
  Dataset d;
  d.features.resize(rows, d1);
  d.labels.resize(rows);
  for (long r = 0; r < rows; ++r) {
    d.labels(r) = values[r * cols] >= 0.0 ? 1.0 : -1.0;
    for (long c = 0; c < d1; ++c) d.features(r, c) = values[r * cols + 1 + c];
  }
  return d;
}

Dataset load_dataset_binary(const std::string& path, int d1) {
  if (d1 < 1) throw ingestion_error("binary format needs the feature count");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ingestion_error("cannot open dataset file: " + path);
  std::vector<double> values;
  double v;
  while (in.read(reinterpret_cast<char*>(&v), sizeof(double)))
    values.push_back(v);
  const long stride = d1 + 1;
  if (values.empty() || values.size() % stride != 0)
    throw ingestion_error("binary dataset size is not a multiple of row size");
  const long rows = static_cast<long>(values.size()) / stride;
  Dataset d;
  d.features.resize(rows, d1);
  d.labels.resize(rows);
  for (long r = 0; r < rows; ++r) {
    d.labels(r) = values[r * stride] >= 0.0 ? 1.0 : -1.0;
    for (long c = 0; c < d1; ++c) d.features(r, c) = values[r * stride + 1 + c];
  }
  return d;
}

Dataset load_dataset(const std::string& path, const std::string& format,
                     int d1) {
  if (format == "csv") return load_dataset_csv(path);
  if (format == "binary") return load_dataset_binary(path, d1);
  throw ingestion_error("unknown dataset format: " + format);
}

Dataset make_two_blobs(long rows, int d1, std::uint64_t seed) {
  RngStream rng(seed, 0xb10b5ULL);
  Eigen::VectorXd direction(d1);
  for (int i = 0; i < d1; ++i) direction(i) = rng.next_gaussian();
  direction.normalize();
  Dataset d;
  d.features.resize(rows, d1);
  d.labels.resize(rows);
  for (long r = 0; r < rows; ++r) {
    const double label = (r % 2 == 0) ? 1.0 : -1.0;
    Eigen::VectorXd pt = 1.5 * label * direction;
    for (int i = 0; i < d1; ++i) pt(i) += 0.5 * rng.next_gaussian();
    d.features.row(r) = pt.transpose();
    d.labels(r) = label;
  }
  return d;
}

std::vector<Dataset> partition_dataset(const Dataset& data, int m,
                                       std::uint64_t seed) {
  const long rows = data.rows();
  if (m < 1 || rows < m)
    throw ingestion_error("cannot partition " + std::to_string(rows) +
                          " rows into " + std::to_string(m) + " shards");
  RngStream rng(seed, 0x5aa4dULL);
  std::vector<long> order = rng.sample_without_replacement(rows, rows);
  const long per = rows / m;
  const long dropped = rows - per * m;
  if (dropped > 0)
    std::cerr << "[vrlm] warning: dropping " << dropped
              << " rows (dataset size not divisible by m)\n";
  std::vector<Dataset> shards(m);
  for (int i = 0; i < m; ++i) {
    shards[i].features.resize(per, data.features.cols());
    shards[i].labels.resize(per);
    for (long j = 0; j < per; ++j) {
      const long src = order[i * per + j];
      shards[i].features.row(j) = data.features.row(src);
      shards[i].labels(j) = data.labels(src);
    }
  }
  return shards;
}

// ---------------------------------------------------------------------------
// DROLogistic

DROLogistic::DROLogistic(std::vector<Dataset> shards, double mu,
                         double lambda_reg)
    : ProblemOracle(static_cast<int>(shards.size()),
                    static_cast<int>(shards.at(0).features.cols()),
                    static_cast<int>(shards.at(0).rows()),
                    static_cast<long>(shards.at(0).rows()), mu,
                    /*finite_sum=*/true),
      shards_(std::move(shards)),
      lambda_reg_(lambda_reg) {
  if (mu <= 0.0) throw numeric_error("mu must be positive");
  for (const auto& s : shards_)
    if (s.rows() != n_)
      throw ingestion_error("all agents must hold equally sized shards");
  N_ = static_cast<long>(m_) * n_;
  g_spec_ = ProxSpec::l1(lambda_reg);
  h_spec_ = ProxSpec::simplex(static_cast<int>(n_), 1.0 / m_);

  // Conservative analytic smoothness bound from the exact joint Hessian:
  // the xx block is dominated by max_j ||a_j||^2 / 4 over the weight simplex,
  // the xy block by m * sqrt(sum_j ||a_j||^2), and the yy block is -mu I.
  double L = 0.0;
  for (const auto& s : shards_) {
    double max_norm2 = 0.0, sum_norm2 = 0.0;
    for (long j = 0; j < s.rows(); ++j) {
      const double nj = s.features.row(j).squaredNorm();
      max_norm2 = std::max(max_norm2, nj);
      sum_norm2 += nj;
    }
    L = std::max(L, max_norm2 / 4.0 + m_ * std::sqrt(sum_norm2));
  }
  L_ = L + mu;
  sigma2_ = estimate_sigma2(/*seed=*/54321, /*probes=*/200);
}

void DROLogistic::exact_grad_impl(int agent, const Eigen::VectorXd& x,
                                  const Eigen::VectorXd& y,
                                  Eigen::VectorXd& gx,
                                  Eigen::VectorXd& gy) const {
  const auto& s = shards_[agent];
  gx = Eigen::VectorXd::Zero(d1_);
  gy.resize(d2_);
  const double center = 1.0 / static_cast<double>(N_);
  for (long j = 0; j < n_; ++j) {
    const double b = s.labels(j);
    const double z = b * s.features.row(j).dot(x);
    gx += (m_ * y(j) * b * logistic_loss_deriv(z)) *
          s.features.row(j).transpose();
    gy(j) = m_ * log1pexp(-z) - mu_ * (y(j) - center);
  }
}

void DROLogistic::component_grad(int agent, long component,
                                 const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& y, Eigen::VectorXd& gx,
                                 Eigen::VectorXd& gy) const {
  // Component j carries the full j-th loss term scaled by n plus the dual
  // regularizer, so the component average equals the exact gradient.
  const auto& s = shards_[agent];
  const double b = s.labels(component);
  const double z = b * s.features.row(component).dot(x);
  const double center = 1.0 / static_cast<double>(N_);
  gx = (static_cast<double>(m_) * n_ * y(component) * b *
        logistic_loss_deriv(z)) *
       s.features.row(component).transpose();
  gy = -mu_ * (y - Eigen::VectorXd::Constant(d2_, center));
  gy(component) += static_cast<double>(m_) * n_ * log1pexp(-z);
}

double DROLogistic::objective_impl(int agent, const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& y) const {
  const auto& s = shards_[agent];
  const double center = 1.0 / static_cast<double>(N_);
  double val = 0.0;
  for (long j = 0; j < n_; ++j) {
    const double z = s.labels(j) * s.features.row(j).dot(x);
    val += y(j) * log1pexp(-z);
  }
  val *= m_;
  val -= 0.5 * mu_ *
         (y - Eigen::VectorXd::Constant(d2_, center)).squaredNorm();
  return val;
}

}  // namespace vrlm
