// SPDX-License-Identifier: Apache-2.0

#include "spansketch/verify.hpp"

#include <algorithm>
#include <sstream>

#include "spansketch/estimator.hpp"
#include "spansketch/simulator.hpp"

namespace spansketch {

std::vector<QuantitySpec> verification_quantities() {
  return {
      q_const_one(),
      q_span_count(),
      q_matching_span_count(has_error(), "match-spans:error"),
      q_matching_span_count(service_is("A"), "match-spans:service=A"),
      q_trace_indicator(any_span(service_is("A")), true, "trace-has:service=A"),
      q_a_calls_b("A", "B"),
      q_call_depth(),
      q_a_but_not_b("A", "B"),
  };
}

double min_rate_weighted_estimate(std::span<const Span> sample, const QuantitySpec& quantity) {
  if (sample.empty()) return 0.0;
  double m = 1.0;
  for (const Span& s : sample) m = std::min(m, s.rate.value());
  return quantity(sample) / m;
}

std::string describe_trace(const FullTrace& trace) {
  std::ostringstream os;
  os << "trace " << trace.trace_id.to_hex() << " {";
  for (std::size_t i = 0; i < trace.spans.size(); ++i) {
    const Span& s = trace.spans[i];
    if (i) os << ", ";
    os << s.span_id.value << ":" << s.service;
    if (s.error) os << "!";
    if (s.link.ancestor) os << "<-" << s.link.ancestor->value;
    if (auto e = s.rate.exponent()) {
      os << "@2^-" << *e;
    } else {
      os << "@" << s.rate.value();
    }
  }
  os << "}";
  return os.str();
}

namespace {

struct Checker {
  VerifyReport& report;

  void check(bool ok, const std::function<std::string()>& describe) {
    ++report.checks;
    if (ok) return;
    ++report.failures;
    if (!report.first_counterexample) report.first_counterexample = describe();
  }
};

std::string rstr(const std::optional<Rational>& r) { return r ? r->to_string() : "n/a"; }

// Lowers a random subset of exponents, so s2 >= s1 pointwise.
FullTrace raise_rates(const FullTrace& trace, Rng& rng) {
  FullTrace raised = trace;
  for (Span& s : raised.spans) {
    const int j = *s.rate.exponent();
    if (j > 0 && (rng() & 1)) {
      s.rate = SamplingRate::from_exponent(static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(j))));
    }
  }
  return raised;
}

} // namespace

VerifyReport run_verification(const VerifyOptions& options) {
  VerifyReport report;
  Checker c{report};
  Rng rng(options.seed);
  SmallTraceOptions shape;
  shape.max_spans = std::max<std::size_t>(1, options.max_spans);
  shape.max_exponent = options.max_exponent;

  const auto quantities = verification_quantities();
  auto estimator_for = [&](const QuantitySpec& q) -> OutcomeEstimator {
    if (options.estimator_override) {
      return [&, q](const Outcome& o) { return options.estimator_override(o.sampled, q); };
    }
    return new_estimator_on(q);
  };

  for (std::uint64_t n = 0; n < options.cases; ++n) {
    ++report.cases;
    const FullTrace trace = generate_small_trace(rng, shape);
    const FullTrace raised = raise_rates(trace, rng);
    const OutcomeTable table = enumerate_outcomes(trace);
    const OutcomeTable raised_table = enumerate_outcomes(raised);

    for (const QuantitySpec& q : quantities) {
      const double q_full = q(trace.spans);
      const auto q_exact = Rational::from_double(q_full);
      const OutcomeEstimator est = estimator_for(q);
      auto where = [&](const std::string& what) {
        return what + " for " + q.name + " on " + describe_trace(trace);
      };

      // unbiasedness
      const auto mean_new = exact_expectation_rational(table, est);
      c.check(mean_new && q_exact && *mean_new == *q_exact, [&] {
        return where("E[estimate] = " + rstr(mean_new) + " but q(S) = " + rstr(q_exact));
      });
      const auto mean_naive = exact_expectation_rational(table, naive_estimator_on(q));
      c.check(mean_naive && q_exact && *mean_naive == *q_exact, [&] {
        return where("E[naive] = " + rstr(mean_naive) + " but q(S) = " + rstr(q_exact));
      });

      // variance formulas
      const Numeric var_new = variance_new_exact(trace, q);
      const Numeric var_naive = variance_naive_exact(trace, q);
      const auto oracle_var = exact_variance_rational(table, est);
      c.check(oracle_var && var_new.exact && *oracle_var == Rational(*var_new.exact), [&] {
        return where("oracle variance " + rstr(oracle_var) + " != formula " + var_new.to_string());
      });
      const auto oracle_naive_var = exact_variance_rational(table, naive_estimator_on(q));
      c.check(oracle_naive_var && var_naive.exact && *oracle_naive_var == Rational(*var_naive.exact),
              [&] {
                return where("oracle naive variance " + rstr(oracle_naive_var) + " != formula " +
                             var_naive.to_string());
              });

      // ordering for quantities bounded on this chain
      if (check_quantity_on_chain(q, trace).bounded_on_chain) {
        c.check(var_new.value <= var_naive.value, [&] {
          return where("bounded but Var[new] " + var_new.to_string() + " > Var[naive] " +
                       var_naive.to_string());
        });
      }

      // dominance under pointwise larger rates
      if (q.claims_monotonic) {
        const Numeric var_raised = variance_new_exact(raised, q);
        const auto oracle_raised = exact_variance_rational(raised_table, est);
        c.check(var_new.value >= var_raised.value, [&] {
          return where("monotone but raising rates increased variance " + var_new.to_string() +
                       " -> " + var_raised.to_string());
        });
        c.check(oracle_raised && var_raised.exact && *oracle_raised == Rational(*var_raised.exact),
                [&] { return where("raised-rate oracle variance mismatch"); });
      }

      // closed forms and integrality on every outcome
      for (const Outcome& o : table.outcomes) {
        const Numeric general = estimate_new(o.sampled, q);
        const double tested = est(o);
        c.check(general.is_integer() && tested == general.value, [&] {
          return where("estimate " + std::to_string(tested) + " on an outcome is not the exact integer " +
                       general.to_string());
        });
        c.check(estimate_naive(o.sampled, q, o.is_complete).is_integer(),
                [&] { return where("naive estimate not an integer"); });
        if (q.indicator && q.claims_monotonic) {
          const Numeric closed = estimate_indicator(o.sampled, q);
          c.check(closed.exact == general.exact, [&] {
            return where("indicator closed form " + closed.to_string() + " != " + general.to_string());
          });
        }
      }
    }

    for (const Outcome& o : table.outcomes) {
      const auto matching = q_matching_span_count(has_error());
      const Numeric closed = estimate_matching_spans(o.sampled, has_error());
      const Numeric general = estimate_new(o.sampled, matching);
      c.check(closed.exact && closed.exact == general.exact, [&] {
        return "matching-span closed form " + closed.to_string() + " != " + general.to_string() +
               " on " + describe_trace(trace);
      });
    }
  }
  return report;
}

} // namespace spansketch
