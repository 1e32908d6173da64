#include <benchmark/benchmark.h>

#include <random>
#include <string>

#include "dynamb/montecarlo.hpp"
#include "dynamb/scenario.hpp"
#include "dynamb/wasserstein.hpp"

using namespace dynamb;

namespace {

DiscreteMeasure gaussian_cloud(int d, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Mat x(d, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < d; ++i) x(i, j) = g(rng);
  return DiscreteMeasure::uniform(x);
}

Exec exec_of(const benchmark::State& st) { return st.range(0) ? Exec::Parallel : Exec::Serial; }

void BM_CostMatrix(benchmark::State& st) {
  const auto mu = gaussian_cloud(6, 400, 1), nu = gaussian_cloud(6, 2000, 2);
  for (auto _ : st) benchmark::DoNotOptimize(cost_matrix(mu, nu, 2.0, exec_of(st)));
}

void BM_Coverage(benchmark::State& st) {
  const StudyConfig cfg = load_study(std::string(DYNAMB_CONFIG_DIR) + "/toy2.json",
                                     {"coverage.trials=8", "coverage.reference_samples=1000"});
  for (auto _ : st) benchmark::DoNotOptimize(coverage_experiment(cfg.scenario, cfg.coverage, 7, exec_of(st)));
}

void BM_Concentration(benchmark::State& st) {
  for (auto _ : st)
    benchmark::DoNotOptimize(concentration_check(2.0, {10, 50}, {0.1, 0.5}, 2000, 3, 0.1, exec_of(st)));
}

}  // namespace

// Argument 0 is the serial reference, 1 the OpenMP kernel.
BENCHMARK(BM_CostMatrix)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Coverage)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Concentration)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
