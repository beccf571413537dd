#include <cstddef>
#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "contpol/kernel.hpp"
#include "contpol/optimizer.hpp"
#include "contpol/selection.hpp"
#include "contpol/simulation.hpp"

namespace {

using namespace contpol;

KernelObjective random_objective(std::size_t n, std::size_t d_x, double h) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> t(n), x(n * d_x), w(n);
  for (std::size_t i = 0; i < n; ++i) {
    t[i] = u(rng);
    w[i] = u(rng) - 0.3;
    for (std::size_t p = 0; p < d_x; ++p) x[i * d_x + p] = u(rng);
  }
  return KernelObjective(std::move(t), std::move(x), d_x, std::move(w), h);
}

void BM_Kernel(benchmark::State& state) {
  double u = -30.0, acc = 0.0;
  for (auto _ : state) {
    acc += eval_kernel(u);
    u = u > 30.0 ? -30.0 : u + 0.0137;
  }
  benchmark::DoNotOptimize(acc);
}
BENCHMARK(BM_Kernel);

void BM_ObjectiveGradient(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const KernelObjective obj = random_objective(n, 2, 0.1);
  const MonotoneSeparableFamily fam(2, 8, 0.0, 1.0);
  PolicyParams p{std::vector<double>(fam.dim(), 0.25)};
  std::vector<double> g;
  for (auto _ : state) benchmark::DoNotOptimize(objective_gradient(obj, fam, p, g));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ObjectiveGradient)->Arg(1000)->Arg(10000);

void BM_ProjectMonotone(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> v(static_cast<std::size_t>(state.range(0)));
  for (double& x : v) x = z(rng);
  for (auto _ : state) benchmark::DoNotOptimize(project_monotone(v));
}
BENCHMARK(BM_ProjectMonotone)->Arg(9)->Arg(65)->Arg(1025);

void BM_Maximize(benchmark::State& state) {
  const KernelObjective obj = random_objective(2000, 1, 0.1);
  const MonotoneSeparableFamily fam(1, static_cast<std::size_t>(state.range(0)), 0.0, 1.0);
  OptimizerConfig cfg;
  cfg.n_starts = 4;
  for (auto _ : state) benchmark::DoNotOptimize(maximize(obj, fam, cfg).value);
}
BENCHMARK(BM_Maximize)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_RademacherPenalty(benchmark::State& state) {
  const Dataset ds = rescale_covariates(generate(smooth_quadratic_dgp(), 1000, 3).data);
  const std::vector<double> w(ds.y().begin(), ds.y().end());
  const MonotoneSeparableFamily fam(1, 2, ds.t_lo(), ds.t_hi());
  OptimizerConfig cfg;
  cfg.n_starts = 2;
  for (auto _ : state) benchmark::DoNotOptimize(rademacher_penalty(ds, fam, 0.2, w, 10, 5, cfg));
}
BENCHMARK(BM_RademacherPenalty)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
