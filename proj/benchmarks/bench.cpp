#include <benchmark/benchmark.h>

#include <cmath>

#include "bbb/detcfg.hpp"
#include "bbb/engine.hpp"
#include "bbb/lineage.hpp"

namespace {

bbb::RunManifest manifest(std::size_t N, std::size_t d, double horizon) {
  bbb::RunManifest m;
  m.N = N;
  m.d = d;
  m.horizon = horizon;
  m.dt_obs = horizon;
  m.initial = bbb::InitialCondition::gaussian(1.0);
  return m;
}

void BM_BarycenterDisplacement(benchmark::State& state) {
  const auto m = manifest(static_cast<std::size_t>(state.range(0)), 2, 10.0);
  std::uint64_t r = 0;
  for (auto _ : state) benchmark::DoNotOptimize(bbb::barycenter_displacement(m, bbb::RngStream(1, r++)));
  state.counters["events/s"] =
      benchmark::Counter(static_cast<double>(state.iterations()) * 10.0 * static_cast<double>(m.N),
                         benchmark::Counter::kIsRate);
}
BENCHMARK(BM_BarycenterDisplacement)->Arg(1)->Arg(3)->Arg(10)->Arg(100);

void BM_KillIndex(benchmark::State& state) {
  const std::size_t N = static_cast<std::size_t>(state.range(0));
  bbb::RngStream rng(2, 0);
  bbb::Configuration c(3, N);
  for (std::size_t i = 0; i < N; ++i) {
    const double p[3] = {rng.normal(), rng.normal(), rng.normal()};
    c.push_back(p);
  }
  std::size_t parent = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(bbb::kill_index(c, parent));
    parent = (parent + 1) % N;
  }
}
BENCHMARK(BM_KillIndex)->Arg(4)->Arg(64)->Arg(1024);

void BM_Lineage(benchmark::State& state) {
  const auto m = manifest(5, 1, 3.0);
  std::uint64_t r = 0;
  for (auto _ : state) benchmark::DoNotOptimize(bbb::simulate_bbm_embedded(m, bbb::RngStream(3, r++), 3.0));
}
BENCHMARK(BM_Lineage);

std::vector<bbb::Point> line(std::size_t N) {
  std::vector<bbb::Point> x;
  for (std::size_t i = 0; i < N; ++i) x.push_back(bbb::Point{std::pow(1.7, static_cast<double>(i)) + 0.1 * static_cast<double>(i * i)});
  return x;
}

void BM_Margin(benchmark::State& state) {
  const auto x = line(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(bbb::unambiguity_margin(x));
}
BENCHMARK(BM_Margin)->DenseRange(3, 8);

void BM_Collapse(benchmark::State& state) {
  const auto cfg = bbb::WeightedConfig::uniform(line(static_cast<std::size_t>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(bbb::collapse(cfg));
}
BENCHMARK(BM_Collapse)->DenseRange(3, 8);

}  // namespace

BENCHMARK_MAIN();
