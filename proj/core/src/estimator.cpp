// SPDX-License-Identifier: Apache-2.0

#include "spansketch/estimator.hpp"

#include <algorithm>
#include <set>
#include <thread>

#include "spansketch/error.hpp"
#include "spansketch/sampler.hpp"

namespace spansketch {

namespace {

const SamplingRate& min_rate(std::span<const Span> spans) {
  return std::min_element(spans.begin(), spans.end(),
                          [](const Span& a, const Span& b) { return a.rate < b.rate; })
      ->rate;
}

void add_reciprocal_term(ExactAccumulator& acc, double coefficient, const SamplingRate& p) {
  acc.add(coefficient, 1.0 / p.value(), detail::exact_reciprocal(p));
}

// (a - b)^2 as an exact integer when both are exact and the square fits.
std::optional<std::int64_t> exact_square_diff(double a, double b) {
  auto ea = detail::exact_integer(a);
  auto eb = detail::exact_integer(b);
  if (!ea || !eb) return std::nullopt;
  std::int64_t d = 0;
  std::int64_t sq = 0;
  if (__builtin_sub_overflow(*ea, *eb, &d) || __builtin_mul_overflow(d, d, &sq)) return std::nullopt;
  return sq;
}

// 1/lo - 1/hi as an exact integer for power-of-two rates.
std::optional<std::int64_t> exact_reciprocal_gap(const SamplingRate& lo,
                                                 std::optional<SamplingRate> hi) {
  auto rlo = detail::exact_reciprocal(lo);
  if (!rlo) return std::nullopt;
  std::int64_t rhi = 1;
  if (hi) {
    auto r = detail::exact_reciprocal(*hi);
    if (!r) return std::nullopt;
    rhi = *r;
  }
  return *rlo - rhi;
}

} // namespace

Numeric estimate_naive(std::span<const Span> sample, const QuantitySpec& quantity,
                       bool is_complete) {
  ExactAccumulator acc;
  if (is_complete && !sample.empty()) add_reciprocal_term(acc, quantity(sample), min_rate(sample));
  return acc.result();
}

Numeric estimate_new(std::span<const Span> sample, const QuantitySpec& quantity) {
  ExactAccumulator acc;
  if (sample.empty()) return acc.result();

  std::vector<Span> current(sample.begin(), sample.end());
  double q_prev = quantity(current);
  for (;;) {
    const SamplingRate p = min_rate(current);
    std::vector<Span> next = downsample(current, p.value());
    if (next.empty()) {
      add_reciprocal_term(acc, q_prev, p);
      return acc.result();
    }
    const double q_next = quantity(next);
    add_reciprocal_term(acc, q_prev - q_next, p);
    q_prev = q_next;
    current = std::move(next);
  }
}

Numeric estimate_matching_spans(std::span<const Span> sample, const SpanPredicate& predicate) {
  ExactAccumulator acc;
  for (const Span& s : sample) {
    if (predicate(s)) add_reciprocal_term(acc, 1.0, s.rate);
  }
  return acc.result();
}

Numeric estimate_indicator(std::span<const Span> sample, const QuantitySpec& quantity) {
  if (!quantity.indicator || !quantity.claims_monotonic) {
    throw Error("specialization requires monotone indicator");
  }
  ExactAccumulator acc;
  if (sample.empty() || quantity(sample) == 0.0) return acc.result();

  // k is the last rung whose predecessor set D(O; p'_{k-1}) still matches.
  std::vector<Span> current(sample.begin(), sample.end());
  for (;;) {
    const SamplingRate p = min_rate(current);
    std::vector<Span> next = downsample(current, p.value());
    if (next.empty() || quantity(next) == 0.0) {
      add_reciprocal_term(acc, 1.0, p);
      return acc.result();
    }
    current = std::move(next);
  }
}

EstimateReport composite_estimate(std::span<const SampledTrace> samples,
                                  const QuantitySpec& quantity, CompositeOptions options) {
  {
    std::set<TraceId> seen;
    for (const auto& s : samples) {
      if (!seen.insert(s.trace_id).second) {
        throw Error("stream not grouped: trace " + s.trace_id.to_hex() + " appears twice");
      }
    }
  }

  std::vector<Numeric> terms(samples.size());
  const unsigned threads =
      std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(samples.size())));
  if (threads <= 1) {
    for (std::size_t i = 0; i < samples.size(); ++i) terms[i] = estimate_new(samples[i].spans, quantity);
  } else {
    std::vector<std::jthread> workers;
    workers.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
      workers.emplace_back([&, t] {
        for (std::size_t i = t; i < samples.size(); i += threads) {
          terms[i] = estimate_new(samples[i].spans, quantity);
        }
      });
    }
  }

  EstimateReport report;
  std::optional<std::int64_t> exact_total = std::int64_t{0};
  double total = 0.0;
  bool overflowed = false;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Numeric& t = terms[i];
    if (samples[i].spans.empty()) continue;
    ++report.contributing_traces;
    total += t.value;
    overflowed = overflowed || t.overflowed;
    if (exact_total) {
      if (!t.exact || __builtin_add_overflow(*exact_total, *t.exact, &*exact_total)) {
        if (t.exact) overflowed = true;
        exact_total.reset();
      }
    }
    if (t.overflowed) {
      report.warnings.push_back("trace " + samples[i].trace_id.to_hex() +
                                ": integer overflow, used floating point");
    }
  }
  if (overflowed && report.warnings.empty()) {
    report.warnings.push_back("composite sum overflowed 64-bit integers, used floating point");
  }

  report.estimate.exact = exact_total;
  report.estimate.value = exact_total ? static_cast<double>(*exact_total) : total;
  report.estimate.overflowed = overflowed;
  if (options.keep_terms) {
    report.per_trace_terms.emplace();
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (!samples[i].spans.empty()) report.per_trace_terms->emplace_back(samples[i].trace_id, terms[i]);
    }
  }
  return report;
}

Numeric variance_new_exact(const FullTrace& trace, const QuantitySpec& quantity) {
  ExactAccumulator acc;
  if (trace.spans.empty()) return acc.result();
  const RateLadder ladder = build_rate_ladder(trace.spans);
  const std::size_t n = ladder.size();
  const double q_full = quantity(trace.spans);

  // q(S)^2 (1/p_n - 1)
  acc.add(q_full * q_full, exact_square_diff(q_full, 0.0),
          1.0 / ladder.at(n) - 1.0, exact_reciprocal_gap(ladder.rung(n), std::nullopt));
  for (std::size_t j = 1; j < n; ++j) {
    const double q_j = quantity(downsample(trace.spans, ladder.at(j)));
    const double d = q_full - q_j;
    acc.add(d * d, exact_square_diff(q_full, q_j), 1.0 / ladder.at(j) - 1.0 / ladder.at(j + 1),
            exact_reciprocal_gap(ladder.rung(j), ladder.rung(j + 1)));
  }
  return acc.result();
}

Numeric variance_naive_exact(const FullTrace& trace, const QuantitySpec& quantity) {
  ExactAccumulator acc;
  if (trace.spans.empty()) return acc.result();
  const RateLadder ladder = build_rate_ladder(trace.spans);
  const double q_full = quantity(trace.spans);
  acc.add(q_full * q_full, exact_square_diff(q_full, 0.0), 1.0 / ladder.min() - 1.0,
          exact_reciprocal_gap(ladder.rung(1), std::nullopt));
  return acc.result();
}

} // namespace spansketch
