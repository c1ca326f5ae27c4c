// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "spansketch/estimator.hpp"
#include "spansketch/io.hpp"
#include "spansketch/sampler.hpp"
#include "spansketch/simulator.hpp"

using namespace spansketch;

namespace {

// Sample of one large trace where every span has its own exponent rung.
std::vector<Span> distinct_rate_sample(std::size_t n) {
  std::vector<Span> spans;
  const TraceId trace{1, 1};
  for (std::size_t i = 0; i < n; ++i) {
    Span s;
    s.trace_id = trace;
    s.span_id = SpanId{i + 1};
    s.link = i == 0 ? AncestorLink::root() : AncestorLink::parent(SpanId{i});
    s.rate = SamplingRate::from_exponent(static_cast<int>(i % (kMaxExactExponent + 1)));
    spans.push_back(std::move(s));
  }
  return spans;
}

SimulationResult simulated(std::uint64_t traces) {
  SimulationConfig config;
  config.trace_count = traces;
  config.seed = 42;
  config.rate_policy = RatePolicy::parse("depth:0,1");
  return run_simulation(config);
}

} // namespace

static void BM_EstimateNewSpanCount(benchmark::State& state) {
  const auto sample = distinct_rate_sample(static_cast<std::size_t>(state.range(0)));
  const QuantitySpec q = q_span_count();
  for (auto _ : state) benchmark::DoNotOptimize(estimate_new(sample, q));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_EstimateNewSpanCount)->RangeMultiplier(2)->Range(4, 64)->Complexity();

static void BM_EstimateMatchingClosedForm(benchmark::State& state) {
  const auto sample = distinct_rate_sample(static_cast<std::size_t>(state.range(0)));
  const auto pred = [](const Span&) { return true; };
  for (auto _ : state) benchmark::DoNotOptimize(estimate_matching_spans(sample, pred));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_EstimateMatchingClosedForm)->RangeMultiplier(2)->Range(4, 64)->Complexity();

static void BM_CompositeEstimate(benchmark::State& state) {
  const auto sim = simulated(2000);
  const auto traces = io::reassemble(sim.spans);
  const QuantitySpec q = q_call_depth();
  CompositeOptions options;
  options.threads = static_cast<unsigned>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(composite_estimate(traces, q, options));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(traces.size()));
}
BENCHMARK(BM_CompositeEstimate)->Arg(1)->Arg(4)->UseRealTime();

static void BM_VarianceNewExact(benchmark::State& state) {
  const auto sim = simulated(200);
  const QuantitySpec q = q_span_count();
  for (auto _ : state) {
    double total = 0.0;
    for (const auto& e : sim.ledger) total += variance_new_exact(e.trace, q).value;
    benchmark::DoNotOptimize(total);
  }
}
BENCHMARK(BM_VarianceNewExact);
