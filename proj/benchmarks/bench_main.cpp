#include "mixdecomp/chains.hpp"
#include "mixdecomp/decomposition.hpp"
#include "mixdecomp/evaluate.hpp"
#include "mixdecomp/kernel.hpp"
#include "mixdecomp/simulation.hpp"
#include "mixdecomp/transport.hpp"

#include <benchmark/benchmark.h>

#include <numeric>

using namespace mixdecomp;

static void BM_MixingTimePinceNez(benchmark::State& state) {
  const ChainInstance c = pince_nez(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(mixing_time(*c.kernel, *c.pi, kAnalysisHorizon));
}
BENCHMARK(BM_MixingTimePinceNez)->Arg(8)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

static void BM_TraceKernelToyKcip(benchmark::State& state) {
  const ChainInstance c = toy_kcip(static_cast<int>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(trace_kernel(*c.kernel, c.marked));
}
BENCHMARK(BM_TraceKernelToyKcip)->Arg(8)->Arg(16)->Arg(32)->Unit(benchmark::kMicrosecond);

static void BM_WassersteinHamming(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const Index n = Index{1} << m;
  Vector mu = Vector::LinSpaced(n, 1.0, 2.0), nu = Vector::LinSpaced(n, 2.0, 1.0);
  mu /= mu.sum();
  nu /= nu.sum();
  const BlockMetric metric = BlockMetric::hamming(m);
  for (auto _ : state) benchmark::DoNotOptimize(wasserstein(mu, nu, metric));
}
BENCHMARK(BM_WassersteinHamming)->Arg(2)->Arg(3)->Arg(4)->Unit(benchmark::kMicrosecond);

static void BM_McOccupationTails(benchmark::State& state) {
  const ChainInstance c = pince_nez(16);
  std::vector<State> starts(32);
  std::iota(starts.begin(), starts.end(), State{0});
  const long reps = state.range(0);
  for (auto _ : state) {
    McOccupationTails tails(c.sampler, block_map(c.partition), starts, reps, 7);
    benchmark::DoNotOptimize(tails.tail(0, 1024, 256));
  }
  state.SetItemsProcessed(state.iterations() * reps * static_cast<long>(starts.size()) * 1024);
}
BENCHMARK(BM_McOccupationTails)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
