#include "parametrix/chain.hpp"
#include "parametrix/frozen.hpp"
#include "parametrix/series.hpp"

#include <benchmark/benchmark.h>

using namespace parametrix;

namespace {

ModelSpec sin1d(const std::string& innovation = "gaussian") {
  ModelConfig cfg;
  cfg.family = "sin1d";
  cfg.c = 0.5;
  cfg.innovation = innovation;
  return build_model(cfg);
}

void BM_FrozenDensityDerivative(benchmark::State& state) {
  const ModelSpec m = sin1d();
  const Vector x = make_vector({0.2}), y = make_vector({0.5});
  MultiIndex nu = MultiIndex::zero(1);
  nu[0] = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(frozen_density_derivative(m, 0.0, 0.25, x, y, nu));
}
BENCHMARK(BM_FrozenDensityDerivative)->DenseRange(0, 4);

void BM_SeriesField(benchmark::State& state) {
  const ModelSpec m = sin1d();
  QuadratureSpec q = QuadratureSpec::defaults(1);
  q.time_nodes = static_cast<int>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(diffusion_density_field(m, 0.0, 0.25, make_vector({0.0}), TruncationPolicy{}, q));
}
BENCHMARK(BM_SeriesField)->Arg(16)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_ChainDensity(benchmark::State& state) {
  const ModelSpec m = sin1d(state.range(1) ? "skewed" : "gaussian");
  const int n = static_cast<int>(state.range(0));
  const auto disc = Discretization::from_horizon(n, 0.25);
  const Vector x = make_vector({0.0});
  const Grid grid = chain_grid(m, disc, x, n);
  for (auto _ : state) benchmark::DoNotOptimize(chain_density(m, disc, 0, n, x, grid));
}
BENCHMARK(BM_ChainDensity)->ArgsProduct({{8, 16, 32, 64}, {0, 1}})->Unit(benchmark::kMillisecond);

void BM_DiscreteParametrix(benchmark::State& state) {
  const ModelSpec m = sin1d();
  const int n = static_cast<int>(state.range(0));
  const auto disc = Discretization::from_horizon(n, 0.25);
  const Vector x = make_vector({0.0});
  const Grid grid = evaluation_grid(m, 0.0, disc.T, x, x, QuadratureSpec::defaults(1));
  for (auto _ : state) benchmark::DoNotOptimize(discrete_parametrix_field(m, disc, 0, n, x, n, grid));
}
BENCHMARK(BM_DiscreteParametrix)->Arg(4)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_KernelHh(benchmark::State& state) {
  const ModelSpec m = sin1d();
  const auto disc = Discretization::from_horizon(16, 0.25);
  const Vector x = make_vector({0.1}), y = make_vector({0.4});
  for (auto _ : state) benchmark::DoNotOptimize(kernel_Hh(m, disc, 0, 8, x, y));
}
BENCHMARK(BM_KernelHh);

}  // namespace

BENCHMARK_MAIN();
