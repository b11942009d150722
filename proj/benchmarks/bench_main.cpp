#include <benchmark/benchmark.h>

#include "vrlm/engine.hpp"
#include "vrlm/metrics.hpp"
#include "vrlm/problems.hpp"
#include "vrlm/prox.hpp"
#include "vrlm/rng.hpp"
#include "vrlm/topology.hpp"
#include "vrlm/vr.hpp"

namespace {

struct Fixture {
  std::unique_ptr<vrlm::QuadraticNCSC> problem;
  vrlm::MixingMatrix W;
  vrlm::SwarmState state;
  std::vector<vrlm::Estimator> estimators;
  vrlm::StepSizes steps;

  explicit Fixture(int m, int d, long n) : W(vrlm::MixingMatrix::ring(m)) {
    problem = vrlm::QuadraticNCSC::random(m, d, d, n, 1.0, 0.1, 7);
    state = vrlm::SwarmState::zeros(m, d, d);
    steps = vrlm::theory_steps_spider(problem->smoothness(),
                                      problem->strong_concavity(), W.rho());
    vrlm::VrConfig vc;
    vc.kind = vrlm::VrKind::Spider;
    vc.q = 8;
    vc.S0 = vc.S1 = n;
    vc.S2 = 8;
    Eigen::VectorXd dx(d), dy(d);
    for (int i = 0; i < m; ++i) {
      estimators.emplace_back(vc, vrlm::RngStream(11, i));
      estimators[i].init(*problem, i, state.X.row(i).transpose(),
                         state.Y.row(i).transpose(), dx, dy);
      state.Dx.row(i) = dx.transpose();
      state.Dy.row(i) = dy.transpose();
    }
    state.Vx = state.Dx;
    state.Vy = state.Dy;
  }
};

void BM_Iterate(benchmark::State& bench) {
  Fixture f(static_cast<int>(bench.range(0)), 20, 64);
  for (auto _ : bench)
    benchmark::DoNotOptimize(
        vrlm::vrlm_iterate(f.state, *f.problem, f.W, f.estimators, f.steps));
}
BENCHMARK(BM_Iterate)->Arg(4)->Arg(8)->Arg(16);

void BM_Stationarity(benchmark::State& bench) {
  Fixture f(8, static_cast<int>(bench.range(0)), 64);
  for (auto _ : bench)
    benchmark::DoNotOptimize(
        vrlm::stationarity(f.state, *f.problem, f.W, f.steps.eta_x));
}
BENCHMARK(BM_Stationarity)->Arg(10)->Arg(50);

void BM_SimplexProjection(benchmark::State& bench) {
  vrlm::RngStream rng(3, 0);
  Eigen::VectorXd v(bench.range(0));
  for (long i = 0; i < v.size(); ++i) v(i) = rng.next_gaussian();
  for (auto _ : bench)
    benchmark::DoNotOptimize(vrlm::project_simplex(v, 1.0));
}
BENCHMARK(BM_SimplexProjection)->Arg(64)->Arg(1024);

void BM_Mixing(benchmark::State& bench) {
  const int m = static_cast<int>(bench.range(0));
  const vrlm::MixingMatrix W = vrlm::MixingMatrix::ring(m);
  Eigen::MatrixXd X = Eigen::MatrixXd::Random(m, 50);
  for (auto _ : bench) benchmark::DoNotOptimize(W.mix(X));
}
BENCHMARK(BM_Mixing)->Arg(8)->Arg(64);

}  // namespace

BENCHMARK_MAIN();
