// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>

#include "spansketch/trace_model.hpp"

namespace spansketch {

/// Result of an estimator or variance formula. `exact` is set when every
/// input was an integer quantity over power-of-two rates and the computation
/// stayed inside 64-bit integers; `value` always carries the result.
struct Numeric {
  double value = 0.0;
  std::optional<std::int64_t> exact;
  bool overflowed = false;

  bool is_integer() const noexcept { return exact.has_value(); }
  /// Integers render without a decimal point, everything else with %.17g.
  std::string to_string() const;
};

inline constexpr int kMaxExactExponent = 52;

namespace detail {

/// Integer value of q when it is integral and within 2^53.
inline std::optional<std::int64_t> exact_integer(double q) noexcept {
  if (!std::isfinite(q) || std::fabs(q) > 9007199254740992.0 || std::trunc(q) != q) {
    return std::nullopt;
  }
  return static_cast<std::int64_t>(q);
}

/// 1/p as an integer when p = 2^-j with j <= 52.
inline std::optional<std::int64_t> exact_reciprocal(const SamplingRate& p) noexcept {
  auto j = p.power_of_two_exponent();
  if (!j || *j > kMaxExactExponent) return std::nullopt;
  return std::int64_t{1} << *j;
}

} // namespace detail

/// Sums terms of the form coefficient * weight, tracking an exact 64-bit
/// integer total alongside the floating total until a term is not integral
/// or the integer total overflows.
class ExactAccumulator {
public:
  void add(double coefficient, double weight, std::optional<std::int64_t> exact_weight) {
    add(coefficient, detail::exact_integer(coefficient), weight, exact_weight);
  }

  void add(double coefficient, std::optional<std::int64_t> c, double weight,
           std::optional<std::int64_t> exact_weight) {
    total_ += coefficient * weight;
    if (!exact_ok_) return;
    if (!c || !exact_weight) {
      exact_ok_ = false;
      return;
    }
    std::int64_t term = 0;
    if (__builtin_mul_overflow(*c, *exact_weight, &term) ||
        __builtin_add_overflow(exact_total_, term, &exact_total_)) {
      exact_ok_ = false;
      overflowed_ = true;
    }
  }

  Numeric result() const {
    Numeric n;
    if (exact_ok_) {
      n.exact = exact_total_;
      n.value = static_cast<double>(exact_total_);
    } else {
      n.value = total_;
    }
    n.overflowed = overflowed_;
    return n;
  }

private:
  double total_ = 0.0;
  std::int64_t exact_total_ = 0;
  bool exact_ok_ = true;
  bool overflowed_ = false;
};

} // namespace spansketch
