// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <bit>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "spansketch/random.hpp"
#include "spansketch/trace_model.hpp"

namespace spansketch {

/// Interval index i for r in [2^-(i+1), 2^-i), computed from one uniform
/// 64-bit word as its leading zero count, clamped to 62.
constexpr int shared_index_from_word(std::uint64_t word) noexcept {
  int lz = std::countl_zero(word);
  return lz > kMaxRateExponent ? kMaxRateExponent : lz;
}

/// Draws a geometrically distributed shared index, P(i = k) = 2^-(k+1).
template <Uniform64Source G>
int draw_shared_index(G& random_source) {
  return shared_index_from_word(random_source());
}

/// Deterministic shared random number derived from a trace id by bit
/// mixing; top 53 bits of the mixed value land in [0, 1).
double shared_random_from_trace_id(const TraceId& trace_id) noexcept;

/// r < rate. Strict inequality, so rate 1 always samples.
inline bool sample_decision(double r, const SamplingRate& rate) noexcept {
  return r < rate.value();
}

/// Integer form for power-of-two ladders: sampled iff i >= j.
constexpr bool sample_decision(SharedIndex index, int exponent) noexcept {
  return index.value >= exponent;
}

/// Keeps exactly the spans with threshold < rate and rewrites the links of
/// kept spans whose linked ancestor was dropped: they then point to the
/// nearest kept ancestor, with skipped_count counting the dropped spans in
/// between. When no ancestor survives, the link has no id and skipped_count
/// counts all ancestors. Links that point outside the input are left as is.
///
/// Because links compose, downsample(downsample(S, a), b) == downsample(S, b)
/// for a <= b, including links.
std::vector<Span> downsample(std::span<const Span> spans, double threshold);

/// Minimum rate over a nonempty span set, the probability that all spans of
/// the set are sampled. Throws Error on empty input.
double probability_complete(std::span<const Span> spans);

/// Samples a full trace with its shared draw; nullopt when nothing is sampled.
std::optional<SampledTrace> run_trace_sampling(const FullTrace& trace);

struct RateLimiterState {
  double limit_per_second = 1.0;
  double ewma_gap_seconds = 0.0;
  double ewma_alpha = 0.2;
  /// Gap assumed for the first observation; <= 0 selects 1/limit.
  double prior_gap_seconds = 0.0;
  std::optional<std::int64_t> last_timestamp_micros;

  /// Throws Error unless limit > 0 and alpha in (0, 1].
  static RateLimiterState make(double limit_per_second, double alpha = 0.2,
                               double prior_gap_seconds = 0.0);
};

inline constexpr double kMinDesiredRate = 0x1.0p-62;

/// Feeds one span arrival into the gap EWMA and returns the updated state
/// with the desired rate min(1, gap * limit), floored at 2^-62.
/// Throws Error("non-monotonic timestamp") when time goes backwards.
std::pair<RateLimiterState, double> rate_limiter_observe(const RateLimiterState& state,
                                                         std::int64_t now_micros);

/// The two exponents bracketing rho, i and i+1 with rho in (2^-(i+1), 2^-i],
/// and the probability of choosing i. Throws Error for rho outside (0, 1].
struct RateBracket {
  int upper_exponent = 0;
  int lower_exponent = 0;
  double upper_probability = 1.0;
};
RateBracket bracket_rate(double rho);

/// Randomly picks one of the two bracketing power-of-two rates so that the
/// expected rate equals rho.
template <Uniform64Source G>
SamplingRate discretize_rate(double rho, G& random_source) {
  RateBracket b = bracket_rate(rho);
  if (b.upper_probability >= 1.0) return SamplingRate::from_exponent(b.upper_exponent);
  bool upper = uniform01(random_source) < b.upper_probability;
  return SamplingRate::from_exponent(upper ? b.upper_exponent : b.lower_exponent);
}

} // namespace spansketch
