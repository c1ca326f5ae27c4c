// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "spansketch/trace_model.hpp"

namespace spansketch {

using SpanPredicate = std::function<bool(const Span&)>;
using SetPredicate = std::function<bool(std::span<const Span>)>;

/// A quantity q over nonempty span sets.
///
/// Contract: evaluate is deterministic and pure. Whenever the set cannot be
/// told apart from a complete trace, q must return the true value for that
/// trace. The claims_* flags are caller assertions; check_quantity_on_chain
/// tests them empirically. Unbiasedness of the estimators never relies on
/// them, only the variance orderings do.
struct QuantitySpec {
  std::string name;
  std::function<double(std::span<const Span>)> evaluate;
  bool claims_bounded = false;
  bool claims_monotonic = false;
  /// Values restricted to {0, 1}.
  bool indicator = false;

  double operator()(std::span<const Span> spans) const { return evaluate(spans); }
};

/// q = 1; number of traces.
QuantitySpec q_const_one();
/// q = |S|.
QuantitySpec q_span_count();
/// q = |S ∩ Y| with Y the spans satisfying the predicate.
QuantitySpec q_matching_span_count(SpanPredicate predicate, std::string name = "match-spans");
/// Indicator of a set property. Monotonicity is whatever the caller claims.
QuantitySpec q_trace_indicator(SetPredicate predicate, bool claims_monotonic,
                               std::string name = "trace-has");
/// Longest chain of edges down from the root, where a nearest-sampled-ancestor
/// link counts 1 + skipped_count edges. Spans whose linked ancestor is not in
/// the set start a fragment at depth 0; an ancestor link without id (nothing
/// above was sampled) places the span at depth skipped_count.
QuantitySpec q_call_depth();
/// 1 iff the set proves that a span of service_a is an ancestor of a span of
/// service_b through links whose endpoints are present.
QuantitySpec q_a_calls_b(std::string service_a, std::string service_b);
/// 1 iff some span has service_a and none has service_b. Not bounded.
QuantitySpec q_a_but_not_b(std::string service_a, std::string service_b);

SpanPredicate service_is(std::string service);
SpanPredicate has_error();
SetPredicate any_span(SpanPredicate predicate);

/// Outcome of evaluating q along the downsampling chain D(S; p_i) of a trace.
struct ChainCheckReport {
  std::vector<double> chain_values; // q(D(S; p_{i})) for i = 0 .. n-1
  bool bounded_on_chain = true;
  bool monotonic_on_chain = true;
  std::vector<std::string> violations; // claimed flags contradicted by the chain

  bool ok() const noexcept { return violations.empty(); }
};

ChainCheckReport check_quantity_on_chain(const QuantitySpec& quantity, const FullTrace& trace);

/// Parses the command-line quantity syntax:
///   const-one | span-count | depth | match-spans:PRED | trace-has:PRED |
///   a-calls-b:A,B | a-not-b:A,B
/// with PRED one of `error` or `service=NAME`. Throws Error when unknown.
QuantitySpec parse_quantity(std::string_view text);

} // namespace spansketch
