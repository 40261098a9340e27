// Throughput benchmarks for the two hot paths: the event-driven simulator
// (events per second at large N) and the deterministic spectrum integrator
// (component-equation steps per second at various truncations).

#include <benchmark/benchmark.h>

#include "fpl/fenwick.hpp"
#include "fpl/gillespie.hpp"
#include "fpl/rng.hpp"
#include "fpl/solver.hpp"
#include "fpl/transform_kit.hpp"

namespace {

void BM_SimulatorEvents(benchmark::State& state) {
  const std::int64_t N = state.range(0);
  const std::int64_t budget = state.range(1);
  fpl::Regime regime{0.5, fpl::LambdaSchedule::constant(1.0)};
  std::int64_t events = 0;
  for (auto _ : state) {
    state.PauseTiming();
    fpl::SimState st = fpl::init_state(fpl::monodisperse(1.0), N, regime, 42);
    state.ResumeTiming();
    for (std::int64_t e = 0; e < budget; ++e) {
      const fpl::SimEvent ev = fpl::step(st);
      benchmark::DoNotOptimize(ev.t);
      if (ev.kind == fpl::EventKind::none) break;
      ++events;
    }
  }
  state.SetItemsProcessed(events);
  state.counters["events/s"] = benchmark::Counter(
      static_cast<double>(events), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_SimulatorEvents)
    ->Args({100000, 1 << 16})
    ->Args({1000000, 1 << 18})
    ->Unit(benchmark::kMillisecond);

void BM_SolverCritical(benchmark::State& state) {
  const int K = static_cast<int>(state.range(0));
  const fpl::TransformBundle b = fpl::build_bundle(fpl::monodisperse(1.0));
  fpl::SolverConfig cfg;
  cfg.K = K;
  cfg.T = 2.0;
  cfg.h = 1e-3;
  cfg.sample_dt = 2.0;
  cfg.richardson = false;
  std::int64_t steps = 0;
  for (auto _ : state) {
    const fpl::Trajectory traj = fpl::solve_critical(b, cfg);
    benchmark::DoNotOptimize(traj.points.back().m0);
    steps += static_cast<std::int64_t>(cfg.T / cfg.h);
  }
  // one item = one size-class update inside one time step
  state.SetItemsProcessed(steps * K);
}
BENCHMARK(BM_SolverCritical)->Arg(100)->Arg(200)->Arg(400)->Unit(
    benchmark::kMillisecond);

void BM_FenwickSample(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  fpl::FenwickTree tree;
  tree.init(n);
  fpl::Xoshiro256pp rng = fpl::Xoshiro256pp::seeded(7);
  for (std::size_t i = 0; i < n; ++i)
    tree.add(i, static_cast<std::int64_t>(1 + rng.below(100)));
  const std::uint64_t total = static_cast<std::uint64_t>(tree.total());
  std::int64_t draws = 0;
  for (auto _ : state) {
    const std::size_t idx =
        tree.find(static_cast<std::int64_t>(rng.below(total)));
    benchmark::DoNotOptimize(idx);
    ++draws;
  }
  state.SetItemsProcessed(draws);
}
BENCHMARK(BM_FenwickSample)->Arg(1 << 16)->Arg(1 << 20);

}  // namespace

BENCHMARK_MAIN();
