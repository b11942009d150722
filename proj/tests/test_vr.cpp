#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "vrlm/errors.hpp"
#include "vrlm/problems.hpp"
#include "vrlm/rng.hpp"
#include "vrlm/vr.hpp"

using vrlm::Estimator;
using vrlm::QuadraticNCSC;
using vrlm::RngStream;
using vrlm::VrConfig;
using vrlm::VrKind;

namespace {

VrConfig spider_cfg(long q, long S0, long S1, long S2) {
  VrConfig c;
  c.kind = VrKind::Spider;
  c.q = q;
  c.S0 = S0;
  c.S1 = S1;
  c.S2 = S2;
  return c;
}

VrConfig storm_cfg(double beta, long S0 = 1, long batch = 1) {
  VrConfig c;
  c.kind = VrKind::Storm;
  c.beta = beta;
  c.S0 = S0;
  c.batch = batch;
  return c;
}

Eigen::VectorXd gaussian_vec(RngStream& rng, int d, double scale = 1.0) {
  Eigen::VectorXd v(d);
  for (int i = 0; i < d; ++i) v(i) = scale * rng.next_gaussian();
  return v;
}

}  // namespace

TEST_CASE("initial estimate") {
  auto p = QuadraticNCSC::random(1, 3, 2, 8, 1.0, 0.4, 7);
  RngStream rng(3, 0);
  const Eigen::VectorXd x0 = gaussian_vec(rng, 3), y0 = gaussian_vec(rng, 2);
  Eigen::VectorXd gx, gy, dx, dy;
  p->exact_grad(0, x0, y0, gx, gy);

  SUBCASE("full initial batch is exact") {
    Estimator est(spider_cfg(4, 8, 8, 2), RngStream(1, 0));
    CHECK(est.init(*p, 0, x0, y0, dx, dy) == 8);
    CHECK((dx - gx).norm() <= 1e-12);
    CHECK((dy - gy).norm() <= 1e-12);
    CHECK(est.primed());
  }
  SUBCASE("sigma = 0 makes any initial batch exact") {
    auto clean = QuadraticNCSC::random(1, 3, 2, 8, 1.0, 0.0, 7);
    Estimator est(spider_cfg(4, 1, 8, 2), RngStream(1, 0));
    est.init(*clean, 0, x0, y0, dx, dy);
    clean->exact_grad(0, x0, y0, gx, gy);
    CHECK((dx - gx).norm() <= 1e-12);
    CHECK((dy - gy).norm() <= 1e-12);
  }
  SUBCASE("single-sample init is unbiased over re-inits") {
    Eigen::VectorXd sx = Eigen::VectorXd::Zero(3),
                    sy = Eigen::VectorXd::Zero(2);
    const long trials = 10000;
    for (long trial = 0; trial < trials; ++trial) {
      Estimator est(spider_cfg(4, 1, 8, 2), RngStream(100 + trial, 0));
      est.init(*p, 0, x0, y0, dx, dy);
      sx += dx;
      sy += dy;
    }
    sx /= static_cast<double>(trials);
    sy /= static_cast<double>(trials);
    const double tol =
        3.0 * std::sqrt(p->variance_bound() / trials) * std::sqrt(5.0) + 1e-6;
    CHECK((sx - gx).norm() + (sy - gy).norm() <= tol);
  }
  SUBCASE("double init is rejected") {
    Estimator est(spider_cfg(4, 8, 8, 2), RngStream(1, 0));
    est.init(*p, 0, x0, y0, dx, dy);
    CHECK_THROWS_AS(est.init(*p, 0, x0, y0, dx, dy), vrlm::numeric_error);
  }
}

TEST_CASE("SPIDER recursion") {
  auto p = QuadraticNCSC::random(1, 3, 2, 9, 1.0, 0.5, 11);
  RngStream rng(5, 0);
  Eigen::VectorXd dx, dy, gx, gy;

  SUBCASE("checkpoint steps with a full big batch are exact") {
    Estimator est(spider_cfg(3, 9, 9, 2), RngStream(2, 0));
    Eigen::VectorXd x = gaussian_vec(rng, 3), y = gaussian_vec(rng, 2);
    est.init(*p, 0, x, y, dx, dy);
    for (long t = 1; t <= 12; ++t) {
      x += gaussian_vec(rng, 3, 0.1);
      y += gaussian_vec(rng, 2, 0.1);
      est.step(*p, 0, t, x, y, dx, dy);
      if (t % 3 == 0) {
        p->exact_grad(0, x, y, gx, gy);
        CHECK((dx - gx).norm() <= 1e-12);
        CHECK((dy - gy).norm() <= 1e-12);
      }
    }
  }
  SUBCASE("stalled iterate keeps the estimate unchanged") {
    Estimator est(spider_cfg(100, 9, 9, 3), RngStream(2, 0));
    const Eigen::VectorXd x = gaussian_vec(rng, 3), y = gaussian_vec(rng, 2);
    est.init(*p, 0, x, y, dx, dy);
    const Eigen::VectorXd dx0 = dx, dy0 = dy;
    est.step(*p, 0, 1, x, y, dx, dy);
    CHECK((dx - dx0).norm() == 0.0);
    CHECK((dy - dy0).norm() == 0.0);
  }
  SUBCASE("deterministic problem gives an exact estimate at every step") {
    auto clean = QuadraticNCSC::random(1, 3, 2, 9, 1.0, 0.0, 11);
    Estimator est(spider_cfg(4, 2, 9, 2), RngStream(2, 0));
    Eigen::VectorXd x = gaussian_vec(rng, 3), y = gaussian_vec(rng, 2);
    est.init(*clean, 0, x, y, dx, dy);
    for (long t = 1; t <= 20; ++t) {
      x += gaussian_vec(rng, 3, 0.1);
      y += gaussian_vec(rng, 2, 0.1);
      est.step(*clean, 0, t, x, y, dx, dy);
      clean->exact_grad(0, x, y, gx, gy);
      CHECK((dx - gx).norm() <= 1e-12);
      CHECK((dy - gy).norm() <= 1e-12);
    }
  }
  SUBCASE("out-of-order steps are rejected") {
    Estimator est(spider_cfg(3, 9, 9, 2), RngStream(2, 0));
    const Eigen::VectorXd x = gaussian_vec(rng, 3), y = gaussian_vec(rng, 2);
    CHECK_THROWS_AS(est.step(*p, 0, 1, x, y, dx, dy), vrlm::numeric_error);
    est.init(*p, 0, x, y, dx, dy);
    CHECK_THROWS_AS(est.step(*p, 0, 2, x, y, dx, dy), vrlm::numeric_error);
  }
}

TEST_CASE("STORM recursion") {
  auto p = QuadraticNCSC::random(1, 3, 2, 10, 1.0, 0.5, 13);
  RngStream rng(7, 0);
  Eigen::VectorXd dx, dy, gx, gy;

  SUBCASE("beta = 1 bitwise equals the plain minibatch gradient") {
    Estimator momentum(storm_cfg(1.0, 4, 3), RngStream(9, 4));
    // hand-coded minibatch estimator with the mirrored RNG stream
    RngStream mirror(9, 4);
    Eigen::VectorXd x = gaussian_vec(rng, 3), y = gaussian_vec(rng, 2);
    momentum.init(*p, 0, x, y, dx, dy);
    Eigen::VectorXd px, py;
    p->stoch_grad(0, x, y, mirror.sample_without_replacement(10, 4), px, py);
    CHECK((dx - px).norm() == 0.0);
    CHECK((dy - py).norm() == 0.0);
    for (long t = 1; t <= 15; ++t) {
      x += gaussian_vec(rng, 3, 0.2);
      y += gaussian_vec(rng, 2, 0.2);
      momentum.step(*p, 0, t, x, y, dx, dy);
      p->stoch_grad(0, x, y, mirror.sample_without_replacement(10, 3), px, py);
      CHECK((dx - px).norm() == 0.0);
      CHECK((dy - py).norm() == 0.0);
    }
  }
  SUBCASE("stalled iterate with beta = 0 keeps the estimate") {
    VrConfig c = storm_cfg(1e-300, 10, 2);
    // beta must be > 0 by contract; use the smallest positive normal instead
    c.beta = std::numeric_limits<double>::min();
    Estimator est(c, RngStream(10, 0));
    const Eigen::VectorXd x = gaussian_vec(rng, 3), y = gaussian_vec(rng, 2);
    est.init(*p, 0, x, y, dx, dy);
    const Eigen::VectorXd dx0 = dx, dy0 = dy;
    est.step(*p, 0, 1, x, y, dx, dy);
    CHECK((dx - dx0).norm() <= 1e-12);
    CHECK((dy - dy0).norm() <= 1e-12);
  }
  SUBCASE("deterministic problem collapses the recursion to exactness") {
    auto clean = QuadraticNCSC::random(1, 3, 2, 10, 1.0, 0.0, 13);
    for (double beta : {0.01, 0.5, 1.0}) {
      Estimator est(storm_cfg(beta, 2, 1), RngStream(11, 0));
      Eigen::VectorXd x = gaussian_vec(rng, 3), y = gaussian_vec(rng, 2);
      est.init(*clean, 0, x, y, dx, dy);
      for (long t = 1; t <= 20; ++t) {
        x += gaussian_vec(rng, 3, 0.1);
        y += gaussian_vec(rng, 2, 0.1);
        est.step(*clean, 0, t, x, y, dx, dy);
        clean->exact_grad(0, x, y, gx, gy);
        CHECK((dx - gx).norm() <= 1e-12);
        CHECK((dy - gy).norm() <= 1e-12);
      }
    }
  }
  SUBCASE("single-step conditional mean recursion") {
    // E[d_t] - grad(z_t) = (1-beta)(d_{t-1} - grad(z_{t-1})) over batch draws
    const double beta = 0.3;
    Eigen::VectorXd x0 = gaussian_vec(rng, 3), y0 = gaussian_vec(rng, 2);
    Eigen::VectorXd x1 = x0 + gaussian_vec(rng, 3, 0.3);
    Eigen::VectorXd y1 = y0 + gaussian_vec(rng, 2, 0.3);
    Eigen::VectorXd d0x, d0y;
    {
      std::vector<long> full(10);
      for (long j = 0; j < 10; ++j) full[j] = j;
      p->stoch_grad(0, x0, y0, full, d0x, d0y);
      d0x += gaussian_vec(rng, 3, 0.2);  // arbitrary fixed prior estimate
      d0y += gaussian_vec(rng, 2, 0.2);
    }
    Eigen::VectorXd sumx = Eigen::VectorXd::Zero(3),
                    sumy = Eigen::VectorXd::Zero(2);
    const long redraws = 10000;
    RngStream draw(12, 0);
    Eigen::VectorXd gnx, gny, gox, goy;
    for (long trial = 0; trial < redraws; ++trial) {
      std::vector<long> batch{static_cast<long>(draw.next_below(10))};
      p->stoch_grad(0, x1, y1, batch, gnx, gny);
      p->stoch_grad(0, x0, y0, batch, gox, goy);
      sumx += gnx + (1.0 - beta) * (d0x - gox);
      sumy += gny + (1.0 - beta) * (d0y - goy);
    }
    sumx /= static_cast<double>(redraws);
    sumy /= static_cast<double>(redraws);
    Eigen::VectorXd g1x, g1y, g0x, g0y;
    p->exact_grad(0, x1, y1, g1x, g1y);
    p->exact_grad(0, x0, y0, g0x, g0y);
    const Eigen::VectorXd expx = g1x + (1.0 - beta) * (d0x - g0x);
    const Eigen::VectorXd expy = g1y + (1.0 - beta) * (d0y - g0y);
    const double se =
        3.0 * std::sqrt(p->variance_bound() / redraws) * std::sqrt(5.0) + 1e-6;
    CHECK((sumx - expx).norm() + (sumy - expy).norm() <= 2.0 * se);
  }
}

TEST_CASE("reproducibility of the d sequence") {
  auto p = QuadraticNCSC::random(1, 3, 2, 12, 1.0, 0.6, 21);
  for (const VrConfig& cfg : {spider_cfg(4, 6, 12, 3), storm_cfg(0.2, 5, 2)}) {
    Estimator a(cfg, RngStream(77, 0));
    Estimator b(cfg, RngStream(77, 0));
    RngStream rng(15, 0);
    Eigen::VectorXd x = gaussian_vec(rng, 3), y = gaussian_vec(rng, 2);
    Eigen::VectorXd ax, ay, bx, by;
    a.init(*p, 0, x, y, ax, ay);
    b.init(*p, 0, x, y, bx, by);
    CHECK((ax - bx).norm() == 0.0);
    for (long t = 1; t <= 25; ++t) {
      x += gaussian_vec(rng, 3, 0.1);
      y += gaussian_vec(rng, 2, 0.1);
      a.step(*p, 0, t, x, y, ax, ay);
      b.step(*p, 0, t, x, y, bx, by);
      CHECK((ax - bx).norm() == 0.0);
      CHECK((ay - by).norm() == 0.0);
    }
  }
}

TEST_CASE("configuration validation") {
  CHECK_THROWS_AS(Estimator(spider_cfg(0, 1, 1, 1), RngStream(1, 0)),
                  vrlm::config_error);
  CHECK_THROWS_AS(Estimator(storm_cfg(0.0), RngStream(1, 0)),
                  vrlm::config_error);
  CHECK_THROWS_AS(Estimator(storm_cfg(1.5), RngStream(1, 0)),
                  vrlm::config_error);
  auto p = QuadraticNCSC::random(1, 2, 2, 4, 1.0, 0.0, 1);
  Estimator est(spider_cfg(2, 8, 8, 1), RngStream(1, 0));
  Eigen::VectorXd dx, dy;
  CHECK_THROWS_AS(est.init(*p, 0, Eigen::VectorXd::Zero(2),
                           Eigen::VectorXd::Zero(2), dx, dy),
                  vrlm::config_error);
}
