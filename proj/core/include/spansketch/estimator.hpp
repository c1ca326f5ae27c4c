// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "spansketch/numeric.hpp"
#include "spansketch/quantity.hpp"
#include "spansketch/trace_model.hpp"

namespace spansketch {

/// Estimator that only trusts complete traces: q(O) / min rate when the
/// caller knows O is complete, 0 otherwise. Completeness cannot be derived
/// from the sample itself, so it is an explicit input.
Numeric estimate_naive(std::span<const Span> sample, const QuantitySpec& quantity,
                       bool is_complete);

/// Unbiased estimate of q(S) from a consistently sampled nonempty subset O,
/// without knowledge of completeness.
///
/// Repeatedly strips the spans carrying the current minimum rate p', adding
/// (q(before) - q(after)) / p' per rung and q(last) / p' for the final rung.
/// Returns 0 for an empty sample.
Numeric estimate_new(std::span<const Span> sample, const QuantitySpec& quantity);

/// Closed form of estimate_new for q = |O ∩ Y|: sum of 1/s over matching spans.
Numeric estimate_matching_spans(std::span<const Span> sample, const SpanPredicate& predicate);

/// Closed form of estimate_new for monotone indicators: 1/p'_k where p'_k is
/// the smallest rate among the spans needed for q to match, 0 when unmatched.
/// Throws Error unless the quantity claims to be a monotone indicator.
Numeric estimate_indicator(std::span<const Span> sample, const QuantitySpec& quantity);

struct EstimateReport {
  Numeric estimate;
  std::optional<std::vector<std::pair<TraceId, Numeric>>> per_trace_terms;
  std::size_t contributing_traces = 0;
  std::vector<std::string> warnings;
};

struct CompositeOptions {
  bool keep_terms = false;
  /// Worker threads; terms are reduced in input order regardless.
  unsigned threads = 1;
};

/// Sum of per-trace estimate_new over a stream of grouped samples.
/// Throws Error("stream not grouped") when a trace id repeats.
EstimateReport composite_estimate(std::span<const SampledTrace> samples,
                                  const QuantitySpec& quantity, CompositeOptions options = {});

/// Exact variance of estimate_new over the shared random number:
///   q(S)^2 (1/p_n - 1) + sum_{j<n} (q(S) - q(D(S; p_j)))^2 (1/p_j - 1/p_{j+1}).
Numeric variance_new_exact(const FullTrace& trace, const QuantitySpec& quantity);

/// Exact variance of estimate_naive: q(S)^2 (1/min rate - 1).
Numeric variance_naive_exact(const FullTrace& trace, const QuantitySpec& quantity);

} // namespace spansketch
