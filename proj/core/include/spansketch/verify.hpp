// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "spansketch/oracle.hpp"
#include "spansketch/quantity.hpp"

namespace spansketch {

/// The built-in quantities exercised by verification: trace count, span
/// count, error spans, spans of service A, "has A", "A calls B", depth and
/// the non-monotone "A but not B".
std::vector<QuantitySpec> verification_quantities();

/// Weights every nonempty sample by q(O) / min rate over O. Biased; kept as
/// a fixture that the verification suite must reject.
double min_rate_weighted_estimate(std::span<const Span> sample, const QuantitySpec& quantity);

struct VerifyOptions {
  std::uint64_t seed = 1;
  std::uint64_t cases = 200;
  std::size_t max_spans = 8;
  int max_exponent = 6;
  /// Replaces estimate_new in every check when set.
  std::function<double(std::span<const Span>, const QuantitySpec&)> estimator_override;
};

struct VerifyReport {
  std::uint64_t cases = 0;
  std::uint64_t checks = 0;
  std::uint64_t failures = 0;
  /// Human-readable description of the first failing check.
  std::optional<std::string> first_counterexample;

  bool ok() const noexcept { return failures == 0; }
};

/// Exhaustive oracle checks on random small traces: unbiasedness of both
/// estimators, the variance formulas, the variance orderings for bounded and
/// monotone quantities, the closed-form specializations and integrality.
VerifyReport run_verification(const VerifyOptions& options);

/// Compact one-line rendering of a trace for counterexamples.
std::string describe_trace(const FullTrace& trace);

} // namespace spansketch
