// SPDX-License-Identifier: Apache-2.0

#include "spansketch/oracle.hpp"

#include <cmath>

#include "spansketch/error.hpp"
#include "spansketch/estimator.hpp"
#include "spansketch/sampler.hpp"

namespace spansketch {

namespace {

std::optional<Rational> exact_rate(std::size_t i, const RateLadder& ladder) {
  if (i == 0) return Rational{};
  auto j = ladder.rung(i).power_of_two_exponent();
  if (!j) return std::nullopt;
  return Rational(1, Rational::Int{1} << *j);
}

} // namespace

OutcomeTable enumerate_outcomes(const FullTrace& trace) {
  OutcomeTable table;
  if (trace.spans.empty()) {
    table.residual_probability = 1.0;
    table.exact_residual = Rational(1);
    return table;
  }
  const RateLadder ladder = build_rate_ladder(trace.spans);
  const std::size_t n = ladder.size();

  bool exact = true;
  for (std::size_t i = 1; i <= n; ++i) exact = exact && exact_rate(i, ladder).has_value();

  for (std::size_t i = 0; i < n; ++i) {
    Outcome o;
    o.probability = ladder.at(i + 1) - ladder.at(i);
    if (exact) o.exact_probability = *exact_rate(i + 1, ladder) - *exact_rate(i, ladder);
    o.sampled = downsample(trace.spans, ladder.at(i));
    o.is_complete = i == 0;
    table.outcomes.push_back(std::move(o));
  }
  table.residual_probability = 1.0 - ladder.max();
  if (exact) table.exact_residual = Rational(1) - *exact_rate(n, ladder);
  return table;
}

double exact_expectation(const OutcomeTable& table, const OutcomeEstimator& estimator) {
  double sum = 0.0;
  for (const auto& o : table.outcomes) sum += o.probability * estimator(o);
  return sum;
}

double exact_expectation(const FullTrace& trace, const OutcomeEstimator& estimator) {
  return exact_expectation(enumerate_outcomes(trace), estimator);
}

double exact_variance(const OutcomeTable& table, const OutcomeEstimator& estimator) {
  double first = 0.0;
  double second = 0.0;
  for (const auto& o : table.outcomes) {
    const double e = estimator(o);
    first += o.probability * e;
    second += o.probability * e * e;
  }
  return second - first * first;
}

double exact_variance(const FullTrace& trace, const OutcomeEstimator& estimator) {
  return exact_variance(enumerate_outcomes(trace), estimator);
}

namespace {

struct RationalMoments {
  Rational first;
  Rational second;
};

std::optional<RationalMoments> rational_moments(const OutcomeTable& table,
                                                const OutcomeEstimator& estimator) {
  if (!table.is_exact()) return std::nullopt;
  RationalMoments m;
  for (const auto& o : table.outcomes) {
    auto e = Rational::from_double(estimator(o));
    if (!e || !o.exact_probability) return std::nullopt;
    const Rational weighted = *o.exact_probability * *e;
    m.first += weighted;
    m.second += weighted * *e;
  }
  return m;
}

} // namespace

std::optional<Rational> exact_expectation_rational(const OutcomeTable& table,
                                                   const OutcomeEstimator& estimator) {
  auto m = rational_moments(table, estimator);
  if (!m) return std::nullopt;
  return m->first;
}

std::optional<Rational> exact_variance_rational(const OutcomeTable& table,
                                                const OutcomeEstimator& estimator) {
  auto m = rational_moments(table, estimator);
  if (!m) return std::nullopt;
  return m->second - m->first * m->first;
}

OutcomeEstimator new_estimator_on(const QuantitySpec& quantity) {
  return [quantity](const Outcome& o) { return estimate_new(o.sampled, quantity).value; };
}

OutcomeEstimator naive_estimator_on(const QuantitySpec& quantity) {
  return [quantity](const Outcome& o) {
    return estimate_naive(o.sampled, quantity, o.is_complete).value;
  };
}

MonteCarloResult monte_carlo_estimate(const TraceGenerator& traces,
                                      const SampleEstimator& estimator,
                                      const QuantitySpec& quantity, std::uint64_t draws,
                                      std::uint64_t seed) {
  if (draws == 0) throw Error("monte carlo needs at least one draw");
  Rng rng(seed);
  // Welford accumulation
  double mean = 0.0;
  double m2 = 0.0;
  for (std::uint64_t d = 0; d < draws; ++d) {
    FullTrace trace = traces(d, rng);
    trace.shared = SharedRandom{uniform01(rng)};
    auto sample = run_trace_sampling(trace);
    const double x = sample ? estimator(*sample, quantity) : 0.0;
    const double delta = x - mean;
    mean += delta / static_cast<double>(d + 1);
    m2 += delta * (x - mean);
  }
  MonteCarloResult r;
  r.mean = mean;
  r.draws = draws;
  if (draws > 1) {
    const double var = m2 / static_cast<double>(draws - 1);
    r.stderr_of_mean = std::sqrt(var / static_cast<double>(draws));
  }
  return r;
}

} // namespace spansketch
