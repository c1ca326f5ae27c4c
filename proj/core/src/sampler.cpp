// SPDX-License-Identifier: Apache-2.0

#include "spansketch/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "spansketch/error.hpp"

namespace spansketch {

double shared_random_from_trace_id(const TraceId& trace_id) noexcept {
  // Two rounds so every bit of both halves reaches every output bit.
  std::uint64_t h = mix64(trace_id.high ^ 0x9e3779b97f4a7c15ULL);
  h = mix64(h ^ trace_id.low);
  return unit_interval(h);
}

std::vector<Span> downsample(std::span<const Span> spans, double threshold) {
  std::unordered_map<std::uint64_t, std::size_t> index;
  index.reserve(spans.size());
  std::vector<char> keep(spans.size());
  for (std::size_t i = 0; i < spans.size(); ++i) {
    index.emplace(spans[i].span_id.value, i);
    keep[i] = threshold < spans[i].rate.value() ? 1 : 0;
  }

  std::vector<Span> out;
  out.reserve(spans.size());
  for (std::size_t i = 0; i < spans.size(); ++i) {
    if (!keep[i]) continue;
    Span s = spans[i];
    AncestorLink link = s.link;
    // Skip over dropped ancestors, accumulating the edges they spanned.
    std::uint64_t skipped = link.skipped_count;
    std::size_t steps = 0;
    while (link.ancestor) {
      auto it = index.find(link.ancestor->value);
      if (it == index.end() || keep[it->second]) break;
      const AncestorLink& up = spans[it->second].link;
      if (up.is_root()) {
        link.ancestor.reset();
        skipped += 1;
        break;
      }
      skipped += 1 + up.skipped_count;
      link.ancestor = up.ancestor;
      if (++steps > spans.size()) break; // cyclic input
    }
    if (!link.is_root()) {
      link.skipped_count =
          static_cast<std::uint32_t>(std::min<std::uint64_t>(skipped, kMaxSkippedCount));
      link.kind = link.skipped_count == 0 && link.ancestor
                      ? AncestorLink::Kind::kDirectParent
                      : AncestorLink::Kind::kNearestSampledAncestor;
    }
    s.link = link;
    out.push_back(std::move(s));
  }
  return out;
}

double probability_complete(std::span<const Span> spans) {
  if (spans.empty()) throw Error("empty span set");
  double m = 1.0;
  for (const auto& s : spans) m = std::min(m, s.rate.value());
  return m;
}

std::optional<SampledTrace> run_trace_sampling(const FullTrace& trace) {
  auto sampled = downsample(trace.spans, threshold_of(trace.shared));
  if (sampled.empty()) return std::nullopt;
  return SampledTrace{trace.trace_id, std::move(sampled)};
}

RateLimiterState RateLimiterState::make(double limit_per_second, double alpha,
                                        double prior_gap_seconds) {
  if (!(limit_per_second > 0.0)) throw Error("rate limit must be positive");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw Error("ewma alpha must lie in (0, 1]");
  RateLimiterState s;
  s.limit_per_second = limit_per_second;
  s.ewma_alpha = alpha;
  s.prior_gap_seconds = prior_gap_seconds;
  return s;
}

std::pair<RateLimiterState, double> rate_limiter_observe(const RateLimiterState& state,
                                                         std::int64_t now_micros) {
  RateLimiterState next = state;
  if (!state.last_timestamp_micros) {
    next.ewma_gap_seconds =
        state.prior_gap_seconds > 0.0 ? state.prior_gap_seconds : 1.0 / state.limit_per_second;
  } else {
    if (now_micros < *state.last_timestamp_micros) throw Error("non-monotonic timestamp");
    double gap = static_cast<double>(now_micros - *state.last_timestamp_micros) * 1e-6;
    next.ewma_gap_seconds = state.ewma_alpha * gap + (1.0 - state.ewma_alpha) * state.ewma_gap_seconds;
  }
  next.last_timestamp_micros = now_micros;
  double rho = std::clamp(next.ewma_gap_seconds * state.limit_per_second, kMinDesiredRate, 1.0);
  return {next, rho};
}

RateBracket bracket_rate(double rho) {
  if (!(rho > 0.0 && rho <= 1.0)) throw Error("desired rate must lie in (0, 1]");
  int e = 0;
  double mantissa = std::frexp(rho, &e);
  RateBracket b;
  if (mantissa == 0.5) {
    // rho = 2^-i exactly
    b.upper_exponent = std::min(1 - e, kMaxRateExponent);
    b.lower_exponent = std::min(b.upper_exponent + 1, kMaxRateExponent);
    b.upper_probability = 1.0;
    return b;
  }
  // rho in (2^(e-1), 2^e), so i = -e
  int i = -e;
  if (i >= kMaxRateExponent) {
    b.upper_exponent = b.lower_exponent = kMaxRateExponent;
    b.upper_probability = 1.0;
    return b;
  }
  b.upper_exponent = i;
  b.lower_exponent = i + 1;
  // (rho - 2^-(i+1)) / (2^-i - 2^-(i+1)) = rho * 2^(i+1) - 1
  b.upper_probability = std::ldexp(rho, i + 1) - 1.0;
  return b;
}

} // namespace spansketch
