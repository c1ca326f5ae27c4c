// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "spansketch/sampler.hpp"
#include "spansketch/trace_model.hpp"

namespace spansketch::testing {

inline const TraceId kTrace{0xabcdefULL, 0x1234ULL};

inline Span span(std::uint64_t id, std::optional<std::uint64_t> parent, SamplingRate rate,
                 std::string service = "svc", bool error = false) {
  Span s;
  s.trace_id = kTrace;
  s.span_id = SpanId{id};
  s.link = parent ? AncestorLink::parent(SpanId{*parent}) : AncestorLink::root();
  s.service = std::move(service);
  s.operation = "op";
  s.rate = rate;
  s.error = error;
  return s;
}

inline SamplingRate exp_rate(int j) { return SamplingRate::from_exponent(j); }

inline FullTrace trace_of(std::vector<Span> spans, SharedDraw shared = SharedRandom{0.0}) {
  return FullTrace{kTrace, std::move(spans), shared};
}

/// The two-span trace: root rate 1/2, child rate 1/4.
inline FullTrace parent_child_trace() {
  return trace_of({span(1, std::nullopt, exp_rate(1), "A"), span(2, 1, exp_rate(2), "B")});
}

/// Independent expectation oracle: midpoint quadrature over r on a dyadic
/// grid of 2^bits cells. Exact whenever all rates are multiples of 2^-bits,
/// since the sampled set is then constant on every cell.
inline double grid_expectation(const FullTrace& trace,
                               const std::function<double(const std::vector<Span>&)>& estimator,
                               int bits = 12) {
  const double cells = std::ldexp(1.0, bits);
  double sum = 0.0;
  for (double k = 0; k < cells; ++k) {
    const double r = (k + 0.5) / cells;
    std::vector<Span> sampled = downsample(trace.spans, r);
    if (!sampled.empty()) sum += estimator(sampled);
  }
  return sum / cells;
}

inline double grid_second_moment(const FullTrace& trace,
                                 const std::function<double(const std::vector<Span>&)>& estimator,
                                 int bits = 12) {
  return grid_expectation(
      trace, [&](const std::vector<Span>& s) { double e = estimator(s); return e * e; }, bits);
}

} // namespace spansketch::testing
