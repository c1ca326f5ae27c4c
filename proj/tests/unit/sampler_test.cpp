// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <set>

#include "spansketch/error.hpp"
#include "spansketch/sampler.hpp"
#include "spansketch/simulator.hpp"
#include "test_support.hpp"

using namespace spansketch;
using namespace spansketch::testing;

namespace {

std::set<std::uint64_t> ids_of(const std::vector<Span>& spans) {
  std::set<std::uint64_t> ids;
  for (const auto& s : spans) ids.insert(s.span_id.value);
  return ids;
}

const Span* find_span(const std::vector<Span>& spans, std::uint64_t id) {
  for (const auto& s : spans) {
    if (s.span_id.value == id) return &s;
  }
  return nullptr;
}

/// Fixed word sequence as a random source.
struct ScriptedSource {
  using result_type = std::uint64_t;
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  std::vector<result_type> words;
  std::size_t next = 0;
  result_type operator()() { return words.at(next++ % words.size()); }
};

} // namespace

TEST(SharedIndex, WordExamples) {
  EXPECT_EQ(shared_index_from_word(~std::uint64_t{0}), 0);
  EXPECT_EQ(shared_index_from_word(std::uint64_t{1} << 63), 0);
  EXPECT_EQ(shared_index_from_word(1), 62);
  EXPECT_EQ(shared_index_from_word(0), 62);
  EXPECT_EQ(shared_index_from_word(std::uint64_t{1} << 60), 3);
  ScriptedSource src{{~std::uint64_t{0}, 1}};
  EXPECT_EQ(draw_shared_index(src), 0);
  EXPECT_EQ(draw_shared_index(src), 62);
}

TEST(SharedIndex, GeometricLaw) {
  Rng rng(2024);
  constexpr int kDraws = 1'000'000;
  std::array<int, 63> counts{};
  for (int i = 0; i < kDraws; ++i) ++counts[draw_shared_index(rng)];
  for (int k = 0; k <= 10; ++k) {
    const double p = std::ldexp(1.0, -(k + 1));
    const double sigma = std::sqrt(kDraws * p * (1 - p));
    EXPECT_LE(std::fabs(counts[k] - kDraws * p), 4 * sigma) << "k=" << k;
  }
}

TEST(SharedRandom, DeterministicAndInRange) {
  Rng rng(5);
  std::vector<double> values;
  for (int i = 0; i < 100'000; ++i) {
    TraceId id{rng(), rng() | 1};
    const double r = shared_random_from_trace_id(id);
    ASSERT_GE(r, 0.0);
    ASSERT_LT(r, 1.0);
    ASSERT_EQ(r, shared_random_from_trace_id(id));
    values.push_back(r);
  }
  // Kolmogorov-Smirnov against uniform; 1% critical value 1.628 / sqrt(n).
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  double d = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    d = std::max({d, (i + 1) / n - values[i], values[i] - i / n});
  }
  EXPECT_LT(d, 1.628 / std::sqrt(n));
}

TEST(SharedRandom, SequentialIdsLookUniform) {
  std::vector<double> values;
  for (std::uint64_t i = 1; i <= 100'000; ++i) {
    values.push_back(shared_random_from_trace_id(TraceId{0, i}));
  }
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  double d = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    d = std::max({d, (i + 1) / n - values[i], values[i] - i / n});
  }
  EXPECT_LT(d, 1.628 / std::sqrt(n));
}

TEST(SampleDecision, Examples) {
  EXPECT_TRUE(sample_decision(0.3, SamplingRate::from_value(0.5)));
  EXPECT_FALSE(sample_decision(0.3, SamplingRate::from_value(0.25)));
  EXPECT_FALSE(sample_decision(0.25, SamplingRate::from_value(0.25)));
  for (double r : {0.0, 0.5, std::nextafter(1.0, 0.0)}) {
    EXPECT_TRUE(sample_decision(r, exp_rate(0)));
  }
}

TEST(SampleDecision, MonotoneInRate) {
  Rng rng(3);
  for (int i = 0; i < 10'000; ++i) {
    const double r = uniform01(rng);
    const double a = 1.0 - uniform01(rng);
    const double b = 1.0 - uniform01(rng);
    const double lo = std::min(a, b);
    const double hi = std::max(a, b);
    if (sample_decision(r, SamplingRate::from_value(lo))) {
      EXPECT_TRUE(sample_decision(r, SamplingRate::from_value(hi)));
    }
  }
}

TEST(SampleDecision, IntegerFormEquivalence) {
  for (int i = 0; i <= kMaxRateExponent; ++i) {
    const double lo = std::ldexp(1.0, -(i + 1));
    const double hi = std::ldexp(1.0, -i);
    // Both ends and the midpoint of [2^-(i+1), 2^-i).
    const std::array<double, 3> rs{lo, (lo + hi) / 2, std::nextafter(hi, 0.0)};
    for (int j = 0; j <= kMaxRateExponent; ++j) {
      for (double r : rs) {
        ASSERT_EQ(sample_decision(r, exp_rate(j)), sample_decision(SharedIndex{i}, j))
            << "i=" << i << " j=" << j << " r=" << r;
      }
    }
  }
}

TEST(Downsample, Examples) {
  const FullTrace t = parent_child_trace();
  EXPECT_EQ(ids_of(downsample(t.spans, 0.3)), (std::set<std::uint64_t>{1}));
  EXPECT_EQ(downsample(t.spans, 0.0), t.spans);
  EXPECT_TRUE(downsample(t.spans, 0.6).empty());
  EXPECT_TRUE(downsample(std::vector<Span>{}, 0.1).empty());
}

TEST(Downsample, RelinksToNearestKeptAncestor) {
  // root(1/2) -> a(1/8) -> b(1/2)
  auto t = trace_of({span(1, std::nullopt, exp_rate(1)), span(2, 1, exp_rate(3)),
                     span(3, 2, exp_rate(1))});
  auto kept = downsample(t.spans, 0.2);
  ASSERT_EQ(ids_of(kept), (std::set<std::uint64_t>{1, 3}));
  EXPECT_EQ(find_span(kept, 3)->link, AncestorLink::nearest_sampled(SpanId{1}, 1));
  EXPECT_TRUE(find_span(kept, 1)->link.is_root());
}

TEST(Downsample, NoKeptAncestorGivesIdlessLink) {
  // root(1/8) -> a(1/8) -> b(1/2)
  auto t = trace_of({span(1, std::nullopt, exp_rate(3)), span(2, 1, exp_rate(3)),
                     span(3, 2, exp_rate(1))});
  auto kept = downsample(t.spans, 0.2);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].link, AncestorLink::nearest_sampled(std::nullopt, 2));
}

TEST(Downsample, NestingAndComposition) {
  Rng rng(17);
  SmallTraceOptions opts;
  opts.general_rates = true;
  for (int iter = 0; iter < 300; ++iter) {
    const FullTrace t = generate_small_trace(rng, opts);
    double a = uniform01(rng);
    double b = uniform01(rng);
    if (a > b) std::swap(a, b);
    const auto da = downsample(t.spans, a);
    const auto db = downsample(t.spans, b);
    const auto ida = ids_of(da);
    for (auto id : ids_of(db)) EXPECT_TRUE(ida.count(id));
    EXPECT_EQ(downsample(da, b), db);
    EXPECT_EQ(downsample(t.spans, 0.0), t.spans);
  }
}

TEST(ProbabilityComplete, Examples) {
  EXPECT_EQ(probability_complete(parent_child_trace().spans), 0.25);
  EXPECT_EQ(probability_complete(std::vector<Span>{span(1, std::nullopt, exp_rate(0))}), 1.0);
  auto t = trace_of({span(1, std::nullopt, exp_rate(3)), span(2, 1, exp_rate(1)),
                     span(3, 1, exp_rate(5))});
  EXPECT_EQ(probability_complete(t.spans), 1.0 / 32);
  EXPECT_THROW(probability_complete(std::vector<Span>{}), Error);
}

TEST(RunTraceSampling, WorkedTraceIntervals) {
  FullTrace t = parent_child_trace();
  t.shared = SharedRandom{0.3};
  auto parent_only = run_trace_sampling(t);
  ASSERT_TRUE(parent_only);
  EXPECT_EQ(ids_of(parent_only->spans), (std::set<std::uint64_t>{1}));

  t.shared = SharedIndex{1}; // r in [1/4, 1/2)
  EXPECT_EQ(ids_of(run_trace_sampling(t)->spans), (std::set<std::uint64_t>{1}));

  t.shared = SharedRandom{0.1};
  auto full = run_trace_sampling(t);
  ASSERT_TRUE(full);
  EXPECT_EQ(full->spans, t.spans);
  for (const auto& s : full->spans) {
    EXPECT_NE(s.link.kind, AncestorLink::Kind::kNearestSampledAncestor);
  }

  t.shared = SharedIndex{0};
  EXPECT_FALSE(run_trace_sampling(t));
}

TEST(RunTraceSampling, ChainSkipsMiddle) {
  auto t = trace_of({span(1, std::nullopt, exp_rate(0)), span(2, 1, exp_rate(2)),
                     span(3, 2, exp_rate(1))},
                    SharedIndex{1});
  auto sampled = run_trace_sampling(t);
  ASSERT_TRUE(sampled);
  ASSERT_EQ(sampled->spans.size(), 2u);
  EXPECT_EQ(find_span(sampled->spans, 3)->link, AncestorLink::nearest_sampled(SpanId{1}, 1));
}

TEST(RunTraceSampling, CompletenessLawAcrossIntervals) {
  Rng rng(23);
  SmallTraceOptions opts;
  for (int iter = 0; iter < 200; ++iter) {
    FullTrace t = generate_small_trace(rng, opts);
    const double pmin = probability_complete(t.spans);
    for (int i = 0; i <= kMaxRateExponent; ++i) {
      t.shared = SharedIndex{i};
      const auto sampled = run_trace_sampling(t);
      const bool full = sampled && sampled->spans.size() == t.spans.size();
      EXPECT_EQ(full, threshold_of(t.shared) < pmin);
    }
  }
}

TEST(RunTraceSampling, ExpectedDistinctRatesBelowTwo) {
  // Geometric ladder: each span gets exponent j with probability 2^-(j+1),
  // capped at 62. Expected distinct sampled rates stays below 2.
  Rng rng(41);
  constexpr int kTraces = 20'000;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int n = 0; n < kTraces; ++n) {
    std::vector<Span> spans;
    const int count = 1 + static_cast<int>(uniform_below(rng, 30));
    for (int k = 0; k < count; ++k) {
      spans.push_back(span(k + 1, k == 0 ? std::nullopt : std::optional<std::uint64_t>{1},
                           exp_rate(draw_shared_index(rng))));
    }
    FullTrace t = trace_of(std::move(spans), SharedIndex{draw_shared_index(rng)});
    const auto sampled = run_trace_sampling(t);
    double distinct = sampled ? static_cast<double>(build_rate_ladder(sampled->spans).size()) : 0;
    sum += distinct;
    sum_sq += distinct * distinct;
  }
  const double mean = sum / kTraces;
  const double sd = std::sqrt(sum_sq / kTraces - mean * mean);
  EXPECT_LE(mean, 2.0 + 3.0 * sd / std::sqrt(double{kTraces}));
}

TEST(RateLimiter, ConvergesToGapTimesLimit) {
  auto state = RateLimiterState::make(10.0);
  double rho = 0.0;
  for (std::int64_t t = 0; t < 200; ++t) {
    std::tie(state, rho) = rate_limiter_observe(state, t * 50'000);
  }
  EXPECT_NEAR(rho, 0.5, 1e-9);
}

TEST(RateLimiter, ClampsAtOne) {
  auto state = RateLimiterState::make(10.0);
  double rho = 0.0;
  for (std::int64_t t = 0; t < 50; ++t) {
    std::tie(state, rho) = rate_limiter_observe(state, t * 1'000'000);
  }
  EXPECT_EQ(rho, 1.0);
}

TEST(RateLimiter, FirstObservationUsesPrior) {
  auto state = RateLimiterState::make(10.0, 0.2, 0.0);
  auto [next, rho] = rate_limiter_observe(state, 123);
  EXPECT_EQ(rho, 1.0); // prior gap 1/R gives rho 1
  auto custom = RateLimiterState::make(10.0, 0.2, 0.02);
  EXPECT_NEAR(rate_limiter_observe(custom, 5).second, 0.2, 1e-12);
  EXPECT_GT(rate_limiter_observe(next, 123).second, 0.0);
}

TEST(RateLimiter, Errors) {
  auto state = RateLimiterState::make(10.0);
  state = rate_limiter_observe(state, 100).first;
  EXPECT_THROW(rate_limiter_observe(state, 99), Error);
  EXPECT_THROW(RateLimiterState::make(0.0), Error);
  EXPECT_THROW(RateLimiterState::make(1.0, 0.0), Error);
  EXPECT_THROW(RateLimiterState::make(1.0, 1.5), Error);
}

TEST(RateLimiter, SimultaneousArrivalsFloorRate) {
  auto state = RateLimiterState::make(10.0, 1.0);
  double rho = 1.0;
  for (int i = 0; i < 5; ++i) std::tie(state, rho) = rate_limiter_observe(state, 0);
  EXPECT_EQ(rho, kMinDesiredRate);
}

TEST(DiscretizeRate, BracketExamples) {
  auto b = bracket_rate(0.3);
  EXPECT_EQ(b.upper_exponent, 1);
  EXPECT_EQ(b.lower_exponent, 2);
  EXPECT_NEAR(b.upper_probability, 0.2, 1e-15);
  EXPECT_EQ(bracket_rate(0.5).upper_probability, 1.0);
  EXPECT_EQ(bracket_rate(0.5).upper_exponent, 1);
  EXPECT_EQ(bracket_rate(1.0).upper_exponent, 0);
  EXPECT_THROW(bracket_rate(0.0), Error);
  EXPECT_THROW(bracket_rate(1.0001), Error);
  EXPECT_THROW(bracket_rate(std::nan("")), Error);
}

TEST(DiscretizeRate, BoundariesAreDeterministic) {
  Rng rng(8);
  for (int i = 0; i < 100; ++i) {
    EXPECT_EQ(*discretize_rate(0.5, rng).exponent(), 1);
    EXPECT_EQ(*discretize_rate(1.0, rng).exponent(), 0);
  }
}

TEST(DiscretizeRate, MeanConvergesToRho) {
  for (double rho : {0.3, 0.7, 0.05, 0.9999, 1e-6}) {
    Rng rng(99);
    const auto b = bracket_rate(rho);
    const double hi = std::ldexp(1.0, -b.upper_exponent);
    const double lo = std::ldexp(1.0, -b.lower_exponent);
    const double sigma = (hi - lo) * std::sqrt(b.upper_probability * (1 - b.upper_probability));
    constexpr int kDraws = 1'000'000;
    double sum = 0.0;
    for (int i = 0; i < kDraws; ++i) sum += discretize_rate(rho, rng).value();
    EXPECT_LE(std::fabs(sum / kDraws - rho), 4 * sigma / std::sqrt(double{kDraws}) + 1e-15)
        << "rho=" << rho;
  }
}
