// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "spansketch/quantity.hpp"
#include "spansketch/random.hpp"
#include "spansketch/rational.hpp"
#include "spansketch/trace_model.hpp"

namespace spansketch {

/// One nonempty sampling outcome of a known trace.
struct Outcome {
  double probability = 0.0;
  /// Exact probability when all rates are powers of two.
  std::optional<Rational> exact_probability;
  std::vector<Span> sampled;
  bool is_complete = false;
};

/// Every nonempty outcome of sampling one trace. Only the ladder interval
/// containing r matters: r in [p_i, p_{i+1}) yields D(S; p_i) with
/// probability p_{i+1} - p_i, and r >= p_n yields the empty set.
struct OutcomeTable {
  std::vector<Outcome> outcomes;
  double residual_probability = 0.0;
  std::optional<Rational> exact_residual;

  bool is_exact() const noexcept { return exact_residual.has_value(); }
};

OutcomeTable enumerate_outcomes(const FullTrace& trace);

/// Estimator evaluated on an outcome; may use the oracle's completeness flag.
using OutcomeEstimator = std::function<double(const Outcome&)>;

/// Sum over nonempty outcomes of probability * estimate.
double exact_expectation(const OutcomeTable& table, const OutcomeEstimator& estimator);
double exact_expectation(const FullTrace& trace, const OutcomeEstimator& estimator);

/// E[est^2] - E[est]^2, the empty outcome contributing 0.
double exact_variance(const OutcomeTable& table, const OutcomeEstimator& estimator);
double exact_variance(const FullTrace& trace, const OutcomeEstimator& estimator);

/// Rational versions. nullopt when the table is not exact or an estimate is
/// not representable; the estimate doubles are converted exactly.
std::optional<Rational> exact_expectation_rational(const OutcomeTable& table,
                                                   const OutcomeEstimator& estimator);
std::optional<Rational> exact_variance_rational(const OutcomeTable& table,
                                                const OutcomeEstimator& estimator);

/// estimate_new / estimate_naive adapted to outcomes.
OutcomeEstimator new_estimator_on(const QuantitySpec& quantity);
OutcomeEstimator naive_estimator_on(const QuantitySpec& quantity);

struct MonteCarloResult {
  double mean = 0.0;
  /// Standard error of the mean; nullopt for a single draw.
  std::optional<double> stderr_of_mean;
  std::uint64_t draws = 0;
};

using TraceGenerator = std::function<FullTrace(std::uint64_t draw, Rng& rng)>;
using SampleEstimator =
    std::function<double(const SampledTrace& sample, const QuantitySpec& quantity)>;

/// For each draw: generate a trace, draw a fresh shared index, sample it and
/// evaluate the estimator (0 for an empty sample). Deterministic per seed.
MonteCarloResult monte_carlo_estimate(const TraceGenerator& traces,
                                      const SampleEstimator& estimator,
                                      const QuantitySpec& quantity, std::uint64_t draws,
                                      std::uint64_t seed);

} // namespace spansketch
