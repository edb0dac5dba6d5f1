#include <benchmark/benchmark.h>

#include "hasl/estimator.hpp"
#include "hasl/models.hpp"
#include "hasl/oscillation.hpp"
#include "hasl/sync.hpp"

using namespace hasl;

static void BM_CircadianEvents(benchmark::State& state) {
  const GspnModel m = circadian();
  StdRandomSource rng(1);
  Simulator sim(m, rng);
  for (auto _ : state) {
    if (!sim.advance()) state.SkipWithError("deadlock");
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_CircadianEvents);

static void BM_SynchronizePeriods(benchmark::State& state) {
  const GspnModel m = circadian();
  const Lha a = build_Aper({"A", 1, 1000, 0, state.range(0)});
  const BoundLha bound(a, m.places(), m.transition_names());
  std::uint64_t seed = 0, events = 0;
  for (auto _ : state) {
    StdRandomSource rng(derive_seed(7, seed++));
    const auto out = synchronize(m, bound, rng);
    events += out.event_count;
    benchmark::DoNotOptimize(out.final_state.valuation.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(events));
}
BENCHMARK(BM_SynchronizePeriods)->Arg(5)->Arg(20)->Unit(benchmark::kMillisecond);

static void BM_SynchronizePeaks(benchmark::State& state) {
  const GspnModel m = circadian();
  PeaksParams p;
  p.delta = 150;
  p.N = state.range(0);
  p.partition = classify_events(m, "A");
  p.bound = 8192;
  const Lha a = build_Apeaks(p);
  const BoundLha bound(a, m.places(), m.transition_names());
  std::uint64_t seed = 0, events = 0;
  for (auto _ : state) {
    StdRandomSource rng(derive_seed(9, seed++));
    const auto out = synchronize(m, bound, rng);
    events += out.event_count;
    benchmark::DoNotOptimize(out.arrays.counts.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(events));
}
BENCHMARK(BM_SynchronizePeaks)->Arg(20)->Unit(benchmark::kMillisecond);

static void BM_ErlangEstimate(benchmark::State& state) {
  const GspnModel m = poisson_source(2.0);
  const Lha a = build_counter("fire", 3);
  const auto expr = parse_hasl("E[last(t)]");
  CiPolicy p;
  p.min_samples = static_cast<std::uint64_t>(state.range(0));
  p.batch = p.min_samples;
  for (auto _ : state) benchmark::DoNotOptimize(estimate(expr, m, a, p, {}).estimate);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ErlangEstimate)->Arg(10000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
