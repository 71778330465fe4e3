#include <benchmark/benchmark.h>

#include "ppesmoc/acquisition.hpp"
#include "ppesmoc/ep.hpp"
#include "ppesmoc/metrics.hpp"
#include "ppesmoc/pareto.hpp"
#include "ppesmoc/problems.hpp"

using namespace ppesmoc;

namespace {

constexpr int kDim = 2;
constexpr int kObjectives = 2;
constexpr int kConstraints = 2;

KernelParams kernel(double noise) {
  KernelParams p;
  p.amplitude2 = 1.0;
  p.lengthscales = Vector::Constant(kDim, 0.3);
  p.noise_var = noise;
  return p;
}

std::vector<GPModel> fitted_models(int n_obs) {
  const SyntheticGPProblem problem = make_synthetic(3, kDim, kObjectives, kConstraints, kernel(0.0));
  Rng rng(11);
  const Points x = uniform_points(unit_bounds(kDim), n_obs, rng);
  std::vector<Vector> y(kObjectives + kConstraints, Vector(n_obs));
  for (int i = 0; i < n_obs; ++i) {
    const Evaluation e = evaluate(problem.spec, x.row(i).transpose());
    for (int k = 0; k < kObjectives; ++k) y[k][i] = e.objectives[k];
    for (int j = 0; j < kConstraints; ++j) y[kObjectives + j][i] = e.constraints[j];
  }
  std::vector<GPModel> models;
  for (const auto& v : y) models.emplace_back(x, v, kernel(1e-3));
  return models;
}

ParetoOptions pareto_options() {
  ParetoOptions o;
  o.grid_size = 500;
  o.num_features = 300;
  o.max_points = 10;
  return o;
}

const AcquisitionContext& shared_context() {
  static const AcquisitionContext ctx = [] {
    const auto models = fitted_models(20);
    Rng rng(5);
    std::vector<ParetoSample> samples;
    for (int s = 0; s < 4; ++s)
      samples.push_back(sample_pareto_set(models, kObjectives, unit_bounds(kDim), rng, pareto_options()));
    return make_context({models}, kObjectives, unit_bounds(kDim), std::move(samples));
  }();
  return ctx;
}

void BM_Alpha(benchmark::State& state) {
  const auto& ctx = shared_context();
  Rng rng(1);
  const Points x = uniform_points(unit_bounds(kDim), static_cast<int>(state.range(0)), rng);
  for (auto _ : state) benchmark::DoNotOptimize(alpha(ctx, x));
}
BENCHMARK(BM_Alpha)->Arg(1)->Arg(4)->Arg(16)->Unit(benchmark::kMicrosecond);

void BM_AlphaWithGradient(benchmark::State& state) {
  const auto& ctx = shared_context();
  Rng rng(2);
  const Points x = uniform_points(unit_bounds(kDim), static_cast<int>(state.range(0)), rng);
  for (auto _ : state) benchmark::DoNotOptimize(alpha_with_grad(ctx, x));
}
BENCHMARK(BM_AlphaWithGradient)->Arg(1)->Arg(4)->Arg(16)->Unit(benchmark::kMicrosecond);

void BM_ConditionOnPareto(benchmark::State& state) {
  const auto models = fitted_models(static_cast<int>(state.range(0)));
  Rng rng(3);
  const ParetoSample sample =
      sample_pareto_set(models, kObjectives, unit_bounds(kDim), rng, pareto_options());
  for (auto _ : state) benchmark::DoNotOptimize(condition_on_pareto(models, kObjectives, sample));
  state.counters["pareto_points"] = sample.size();
}
BENCHMARK(BM_ConditionOnPareto)->Arg(10)->Arg(40)->Unit(benchmark::kMillisecond);

void BM_SampleParetoSet(benchmark::State& state) {
  const auto models = fitted_models(20);
  ParetoOptions o = pareto_options();
  o.grid_size = static_cast<int>(state.range(0));
  Rng rng(4);
  for (auto _ : state)
    benchmark::DoNotOptimize(sample_pareto_set(models, kObjectives, unit_bounds(kDim), rng, o));
}
BENCHMARK(BM_SampleParetoSet)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_Hypervolume2d(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Matrix front(n, 2);
  for (int i = 0; i < n; ++i) {
    const double t = (i + 0.5) / n;
    front(i, 0) = t;
    front(i, 1) = (1.0 - t) * (1.0 - t);
  }
  Vector ref(2);
  ref << 1.1, 1.1;
  for (auto _ : state) benchmark::DoNotOptimize(hypervolume_2d(front, ref));
}
BENCHMARK(BM_Hypervolume2d)->Arg(10)->Arg(1000)->Arg(100000);

}  // namespace

BENCHMARK_MAIN();
