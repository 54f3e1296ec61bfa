#include <benchmark/benchmark.h>

#include "mcqn/fluid.hpp"
#include "mcqn/lyapunov.hpp"
#include "mcqn/presets.hpp"
#include "mcqn/simulator.hpp"

using namespace mcqn;

// Events per second for each preset under its own discipline.
static void BM_SimulatorEvents(benchmark::State& state) {
  const auto names = preset_names();
  const ValidatedSpec spec = preset(names[static_cast<std::size_t>(state.range(0))]);
  state.SetLabel(names[static_cast<std::size_t>(state.range(0))]);
  std::vector<long long> counts(static_cast<std::size_t>(spec.num_classes()), 20);
  const SimState x0 = fresh_state(spec, counts, 1);
  constexpr std::uint64_t kEvents = 100'000;
  for (auto _ : state) {
    Simulator sim(spec, x0, 2);
    while (sim.events() < kEvents) sim.step();
    benchmark::DoNotOptimize(sim.clock());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(kEvents));
}
BENCHMARK(BM_SimulatorEvents)->DenseRange(0, 4)->Unit(benchmark::kMillisecond);

static void BM_FluidTrajectory(benchmark::State& state) {
  const FluidSpec spec = FluidSpec::from(preset("rybko_stolyar_stable"));
  const auto dirs = random_directions(spec.num_classes, 16, 3);
  for (auto _ : state) {
    for (const auto& d : dirs) benchmark::DoNotOptimize(fluid_trajectory(spec, d, 20.0));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(dirs.size()));
}
BENCHMARK(BM_FluidTrajectory);

static void BM_CertificateSynthesis(benchmark::State& state) {
  const FluidSpec spec = FluidSpec::from(preset("rybko_stolyar_stable"));
  for (auto _ : state) benchmark::DoNotOptimize(synthesize_linear_certificate(spec, 4));
}
BENCHMARK(BM_CertificateSynthesis)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
