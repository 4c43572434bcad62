#include <cmath>

#include <benchmark/benchmark.h>

#include "hfr/linalg.hpp"
#include "hfr/optimizers.hpp"
#include "hfr/problems.hpp"

namespace {

using namespace hfr;

PointXY Start(const MinimaxProblem& f) {
  return PointXY(Vec::Constant(f.dim_x(), 0.3), Vec::Constant(f.dim_y(), -0.2));
}

void RunSteps(benchmark::State& state, const MinimaxProblem& f, opt::OptimizerConfig cfg) {
  opt::RunState st;
  PointXY p = Start(f);
  const PointXY p0 = p;
  for (auto _ : state) {
    p = opt::step(f, p, cfg, st);
    if (!std::isfinite(p.x.squaredNorm() + p.y.squaredNorm())) p = p0;
    benchmark::DoNotOptimize(p.x.data());
  }
  state.counters["hvp/step"] =
      benchmark::Counter(static_cast<double>(st.counts.hvp), benchmark::Counter::kAvgIterations);
  state.counters["grad/step"] = benchmark::Counter(
      static_cast<double>(st.counts.grad_x + st.counts.grad_y), benchmark::Counter::kAvgIterations);
}

opt::OptimizerConfig Hfr(opt::HessInvMode mode, int cg_iters = 5) {
  opt::OptimizerConfig c;
  c.algorithm = opt::Algorithm::kHessianFr;
  c.eta_x = 0.01;
  c.eta_y1 = 0.01;
  c.eta_y2 = 0.005;
  c.hess_inv = mode;
  c.cg.max_iters = cg_iters;
  c.cg.residual_tol = 1e-300;
  return c;
}

void BM_QuadraticHfr(benchmark::State& state) {
  const Index d = state.range(0);
  const auto f = problems::make_random_strict_minimax(d, d, 7);
  RunSteps(state, *f, Hfr(static_cast<opt::HessInvMode>(state.range(1))));
}
BENCHMARK(BM_QuadraticHfr)
    ->ArgsProduct({{4, 16, 64}, {static_cast<long>(opt::HessInvMode::kExact),
                                 static_cast<long>(opt::HessInvMode::kCg),
                                 static_cast<long>(opt::HessInvMode::kDg)}});

void BM_QuadraticBaseline(benchmark::State& state) {
  const auto f = problems::make_random_strict_minimax(16, 16, 7);
  opt::OptimizerConfig c;
  c.algorithm = static_cast<opt::Algorithm>(state.range(0));
  c.eta_x = c.eta_y = 0.01;
  RunSteps(state, *f, c);
}
BENCHMARK(BM_QuadraticBaseline)
    ->Arg(static_cast<long>(opt::Algorithm::kTtsgda))
    ->Arg(static_cast<long>(opt::Algorithm::kEg))
    ->Arg(static_cast<long>(opt::Algorithm::kOgda));

void BM_GanStochastic(benchmark::State& state) {
  problems::MixtureGanOptions o;
  o.n_data = 256;
  o.m_noise = 256;
  const auto gan = problems::make_mixture_gan(o);
  opt::OptimizerConfig c = Hfr(opt::HessInvMode::kCg, static_cast<int>(state.range(1)));
  c.eta_x = c.eta_y1 = 1e-3;
  c.eta_y2 = 5e-4;
  opt::MinibatchSampler sampler(gan->size(), static_cast<std::size_t>(state.range(0)), 3);
  opt::RunState st;
  PointXY p = gan->initial_point(1);
  for (auto _ : state) {
    const auto batch = sampler.next();
    p = opt::step_stochastic(*gan, batch, p, c, st);
    benchmark::DoNotOptimize(p.x.data());
  }
}
BENCHMARK(BM_GanStochastic)->ArgsProduct({{16, 64, 256}, {1, 5}})->Unit(benchmark::kMicrosecond);

void BM_CgSquared(benchmark::State& state) {
  const Index n = state.range(0);
  const auto f = problems::make_random_strict_minimax(n, n, 11);
  const Mat h = f->blocks().hyy;
  const Vec r = Vec::Ones(n);
  linalg::CgParams params;
  params.max_iters = static_cast<int>(n);
  params.residual_tol = 1e-12;
  for (auto _ : state) {
    auto res = linalg::cg_solve_squared([&](const Vec& v) { return Vec(h * v); }, r, params);
    benchmark::DoNotOptimize(res.solution.data());
  }
}
BENCHMARK(BM_CgSquared)->Arg(4)->Arg(16)->Arg(64);

void BM_SpectralRadius(benchmark::State& state) {
  const Index n = state.range(0);
  const Mat a = Mat::Random(n, n);
  for (auto _ : state) benchmark::DoNotOptimize(linalg::spectral_radius(a));
}
BENCHMARK(BM_SpectralRadius)->Arg(4)->Arg(16)->Arg(64);

}  // namespace

BENCHMARK_MAIN();
