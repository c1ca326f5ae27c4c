// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>

namespace spansketch {

/// Exact rational over 128-bit integers, always normalized (den > 0,
/// gcd(num, den) = 1). Arithmetic throws Error on overflow.
class Rational {
public:
  using Int = __int128;

  Rational() = default;
  Rational(long long n) : num_(n), den_(1) {} // NOLINT(google-explicit-constructor)
  Rational(Int num, Int den);

  /// Exact conversion of a finite double. Every finite double is a dyadic
  /// rational; nullopt when it does not fit into 128 bits.
  static std::optional<Rational> from_double(double v);

  Int num() const noexcept { return num_; }
  Int den() const noexcept { return den_; }
  double to_double() const noexcept;
  bool is_integer() const noexcept { return den_ == 1; }
  std::string to_string() const;

  friend Rational operator+(const Rational& a, const Rational& b);
  friend Rational operator-(const Rational& a, const Rational& b);
  friend Rational operator*(const Rational& a, const Rational& b);
  friend Rational operator/(const Rational& a, const Rational& b);
  Rational& operator+=(const Rational& o) { return *this = *this + o; }
  Rational& operator-=(const Rational& o) { return *this = *this - o; }

  friend bool operator==(const Rational& a, const Rational& b) noexcept {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend bool operator<(const Rational& a, const Rational& b);
  friend bool operator<=(const Rational& a, const Rational& b) { return !(b < a); }

private:
  Int num_ = 0;
  Int den_ = 1;
};

} // namespace spansketch
