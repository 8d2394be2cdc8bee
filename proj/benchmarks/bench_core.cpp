/* Microbenchmarks for the hot paths: event simulation, the Euler scheme,
 * compensator extraction, rank statistics, and the raw generator. */

#include <benchmark/benchmark.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "kstage/compensator.hpp"
#include "kstage/model.hpp"
#include "kstage/rng.hpp"
#include "kstage/scaling.hpp"
#include "kstage/sde.hpp"
#include "kstage/stats.hpp"
#include "kstage/trajectory.hpp"

namespace {

void BM_GillespieAbsorption(benchmark::State& state) {
  const int K = static_cast<int>(state.range(0));
  const std::int64_t n = 100000;
  const kstage::ModelParams params = kstage::ModelParams::critical(n, K);
  const kstage::ScalingConstants c =
      kstage::scaling_constants(kstage::Regime::intermediate, n, K);
  const kstage::PopulationState init =
      kstage::initial_with_stage1(params, std::llround(c.alpha[1]));

  std::int64_t events = 0;
  std::uint64_t rep = 0;
  for (auto _ : state) {
    const kstage::Trajectory traj =
        kstage::simulate_path(params, init, kstage::StopRule::absorption(),
                              kstage::RngSeed{1234, kstage::compose_stream(1, 0, rep++)});
    events += static_cast<std::int64_t>(traj.times.size()) - 1;
    benchmark::DoNotOptimize(traj.final_state.a.data());
  }
  state.SetItemsProcessed(events);  // items = chain events
}
BENCHMARK(BM_GillespieAbsorption)->Arg(1)->Arg(2)->Arg(3);

void BM_EulerMaruyama(benchmark::State& state) {
  const kstage::SdeSpec spec{2, {0.0, 0.0}, kstage::SdeVariant::intermediate};
  const std::vector<double> init{0.0, 1.0, 0.5, 0.0};
  const kstage::SdeConfig cfg{1e-4, 1.0};

  std::int64_t steps = 0;
  std::uint64_t rep = 0;
  for (auto _ : state) {
    const kstage::DiffusionPath path =
        kstage::integrate_sde(spec, init, cfg,
                              kstage::RngSeed{1234, kstage::compose_stream(2, 0, rep++)});
    steps += static_cast<std::int64_t>(path.times.size()) - 1;
    benchmark::DoNotOptimize(path.values.back().data());
  }
  state.SetItemsProcessed(steps);
}
BENCHMARK(BM_EulerMaruyama);

void BM_CompensatorPaths(benchmark::State& state) {
  const std::int64_t n = 10000;
  const int K = 2;
  const kstage::ModelParams params = kstage::ModelParams::critical(n, K);
  const kstage::ScalingConstants c =
      kstage::scaling_constants(kstage::Regime::intermediate, n, K);
  const kstage::PopulationState init =
      kstage::initial_with_stage1(params, std::llround(c.alpha[1]));
  const kstage::Trajectory traj =
      kstage::simulate_path(params, init, kstage::StopRule::at_time(c.tau),
                            kstage::RngSeed{1234, kstage::compose_stream(1, 1, 0)});

  std::int64_t rows = 0;
  for (auto _ : state) {
    const kstage::CompensatorPaths paths = kstage::compensator_paths(traj, c);
    rows += static_cast<std::int64_t>(paths.times.size());
    benchmark::DoNotOptimize(paths.martingale.back().data());
  }
  state.SetItemsProcessed(rows);
}
BENCHMARK(BM_CompensatorPaths);

void BM_KsTwoSample(benchmark::State& state) {
  const std::size_t m = static_cast<std::size_t>(state.range(0));
  kstage::RngStream gen(1234, 7);
  std::vector<double> a(m), b(m);
  for (double& v : a) v = gen.normal();
  for (double& v : b) v = gen.normal() + 0.1;

  std::int64_t items = 0;
  for (auto _ : state) {
    const kstage::KsResult r = kstage::ks_two_sample(a, b);
    benchmark::DoNotOptimize(r.statistic);
    items += static_cast<std::int64_t>(2 * m);
  }
  state.SetItemsProcessed(items);
}
BENCHMARK(BM_KsTwoSample)->Arg(1 << 12)->Arg(1 << 15)->Arg(1 << 17);

void BM_PhiloxU64(benchmark::State& state) {
  kstage::RngStream gen(1234, 9);
  std::int64_t items = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(gen.next_u64());
    ++items;
  }
  state.SetItemsProcessed(items);
}
BENCHMARK(BM_PhiloxU64);

void BM_PhiloxNormal(benchmark::State& state) {
  kstage::RngStream gen(1234, 10);
  std::int64_t items = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(gen.normal());
    ++items;
  }
  state.SetItemsProcessed(items);
}
BENCHMARK(BM_PhiloxNormal);

}  // namespace

BENCHMARK_MAIN();
