#include <benchmark/benchmark.h>

#include "qspec/bandwidths.hpp"
#include "qspec/bootstrap.hpp"
#include "qspec/quantile_scale.hpp"
#include "qspec/residual_process.hpp"
#include "qspec/simulation.hpp"

namespace {

using namespace qspec;

Sample make_sample(std::size_t n) {
  Rng rng = make_rng(7, n);
  return generate(ModelSpec{ModelId::m3h}, n, rng);
}

ResidualSet make_residuals(std::size_t n) {
  const Sample s = make_sample(n);
  std::vector<double> q(n);
  for (std::size_t i = 0; i < n; ++i) q[i] = base_curve(s.x[i]);
  return compute_residuals(s, q, std::nullopt, TrimWindow{0.0, 1.0});
}

void BM_ProcessReference(benchmark::State& state) {
  const auto res = make_residuals(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(independence_process_reference(res, res));
}

void BM_ProcessSerial(benchmark::State& state) {
  const auto res = make_residuals(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(independence_process(res, res, Exec{1}));
}

void BM_ProcessOpenMP(benchmark::State& state) {
  const auto res = make_residuals(static_cast<std::size_t>(state.range(0)));
  const Exec exec{available_workers()};
  for (auto _ : state) benchmark::DoNotOptimize(independence_process(res, res, exec));
}

void BM_QuantileCurve(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Sample s = make_sample(n);
  const auto bw = default_bandwidths(n, rice_variance(s)).set;
  const auto grid = linspace(0.0, 1.0, 201);
  const Exec exec{state.range(1) == 0 ? 1 : available_workers()};
  for (auto _ : state) benchmark::DoNotOptimize(estimate_quantile_curve(s, 0.5, bw, grid, exec));
}

void BM_BootstrapTest(benchmark::State& state) {
  const Sample s = make_sample(100);
  const auto bw = default_bandwidths(100, rice_variance(s)).set;
  BootstrapConfig cfg;
  cfg.B = 20;
  cfg.workers = state.range(0) == 0 ? 1 : available_workers();
  for (auto _ : state) {
    benchmark::DoNotOptimize(bootstrap_test(s, 0.5, bw, cfg, ModelKind::location_scale));
  }
}

}  // namespace

BENCHMARK(BM_ProcessReference)->Arg(50)->Arg(100)->Arg(200);
BENCHMARK(BM_ProcessSerial)->Arg(50)->Arg(100)->Arg(200)->Arg(1000);
BENCHMARK(BM_ProcessOpenMP)->Arg(50)->Arg(100)->Arg(200)->Arg(1000);
BENCHMARK(BM_QuantileCurve)->Args({100, 0})->Args({100, 1})->Args({400, 0})->Args({400, 1});
BENCHMARK(BM_BootstrapTest)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
