// SPDX-License-Identifier: Apache-2.0

#include "spansketch/rational.hpp"

#include <algorithm>
#include <cmath>

#include "spansketch/error.hpp"

namespace spansketch {

namespace {

using Int = Rational::Int;

Int gcd(Int a, Int b) {
  if (a < 0) a = -a;
  if (b < 0) b = -b;
  while (b != 0) {
    Int t = a % b;
    a = b;
    b = t;
  }
  return a;
}

Int checked_mul(Int a, Int b) {
  Int r;
  if (__builtin_mul_overflow(a, b, &r)) throw Error("rational overflow");
  return r;
}

Int checked_add(Int a, Int b) {
  Int r;
  if (__builtin_add_overflow(a, b, &r)) throw Error("rational overflow");
  return r;
}

std::string int_to_string(Int v) {
  if (v == 0) return "0";
  bool neg = v < 0;
  std::string s;
  while (v != 0) {
    int d = static_cast<int>(v % 10);
    s.push_back(static_cast<char>('0' + (d < 0 ? -d : d)));
    v /= 10;
  }
  if (neg) s.push_back('-');
  std::reverse(s.begin(), s.end());
  return s;
}

} // namespace

Rational::Rational(Int num, Int den) {
  if (den == 0) throw Error("rational with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  Int g = gcd(num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
  num_ = num;
  den_ = den;
}

std::optional<Rational> Rational::from_double(double v) {
  if (!std::isfinite(v)) return std::nullopt;
  if (v == 0.0) return Rational{};
  int exp = 0;
  double frac = std::frexp(v, &exp);
  // v = mantissa * 2^(exp - 53), mantissa a 53-bit integer
  auto mantissa = static_cast<long long>(std::ldexp(frac, 53));
  int shift = exp - 53;
  Int num = mantissa;
  if (shift >= 0) {
    if (shift > 70) return std::nullopt;
    return Rational(num << shift, 1);
  }
  while (shift < 0 && (num & 1) == 0) {
    num >>= 1;
    ++shift;
  }
  if (-shift > 125) return std::nullopt;
  return Rational(num, Int{1} << -shift);
}

double Rational::to_double() const noexcept {
  return static_cast<double>(num_) / static_cast<double>(den_);
}

std::string Rational::to_string() const {
  if (den_ == 1) return int_to_string(num_);
  return int_to_string(num_) + "/" + int_to_string(den_);
}

Rational operator+(const Rational& a, const Rational& b) {
  Int g = gcd(a.den_, b.den_);
  Int da = a.den_ / g;
  Int db = b.den_ / g;
  return Rational(checked_add(checked_mul(a.num_, db), checked_mul(b.num_, da)),
                  checked_mul(a.den_, db));
}

Rational operator-(const Rational& a, const Rational& b) {
  return a + Rational(-b.num_, b.den_);
}

Rational operator*(const Rational& a, const Rational& b) {
  Int g1 = gcd(a.num_, b.den_);
  Int g2 = gcd(b.num_, a.den_);
  if (g1 == 0) g1 = 1;
  if (g2 == 0) g2 = 1;
  return Rational(checked_mul(a.num_ / g1, b.num_ / g2), checked_mul(a.den_ / g2, b.den_ / g1));
}

Rational operator/(const Rational& a, const Rational& b) {
  if (b.num_ == 0) throw Error("rational division by zero");
  return a * Rational(b.den_, b.num_);
}

bool operator<(const Rational& a, const Rational& b) {
  return (a - b).num_ < 0;
}

} // namespace spansketch
