// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "spansketch/sampler.hpp"
#include "spansketch/simulator.hpp"

using namespace spansketch;

static void BM_DrawSharedIndex(benchmark::State& state) {
  Rng rng(7);
  for (auto _ : state) benchmark::DoNotOptimize(draw_shared_index(rng));
}
BENCHMARK(BM_DrawSharedIndex);

static void BM_SharedRandomFromTraceId(benchmark::State& state) {
  TraceId id{0x0123456789abcdefULL, 1};
  for (auto _ : state) {
    benchmark::DoNotOptimize(shared_random_from_trace_id(id));
    ++id.low;
  }
}
BENCHMARK(BM_SharedRandomFromTraceId);

static void BM_DiscretizeRate(benchmark::State& state) {
  Rng rng(7);
  for (auto _ : state) benchmark::DoNotOptimize(discretize_rate(0.3, rng));
}
BENCHMARK(BM_DiscretizeRate);

static void BM_RunTraceSampling(benchmark::State& state) {
  SimulationConfig config;
  config.seed = 3;
  config.branching = 2.0;
  config.max_depth = 8;
  config.rate_policy = RatePolicy::parse("random:6");
  const FullTrace trace = generate_trace(config, 0);
  for (auto _ : state) benchmark::DoNotOptimize(run_trace_sampling(trace));
  state.counters["spans"] = static_cast<double>(trace.spans.size());
}
BENCHMARK(BM_RunTraceSampling);

static void BM_GenerateTrace(benchmark::State& state) {
  SimulationConfig config;
  config.seed = 3;
  config.rate_policy = RatePolicy::parse("depth:0,1");
  std::uint64_t ordinal = 0;
  for (auto _ : state) benchmark::DoNotOptimize(generate_trace(config, ordinal++));
}
BENCHMARK(BM_GenerateTrace);
