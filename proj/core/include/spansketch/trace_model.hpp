// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace spansketch {

/// 128-bit trace identifier. Zero is reserved as "invalid".
struct TraceId {
  std::uint64_t high = 0;
  std::uint64_t low = 0;

  bool valid() const noexcept { return high != 0 || low != 0; }
  std::string to_hex() const;
  static std::optional<TraceId> from_hex(std::string_view hex);

  friend auto operator<=>(const TraceId&, const TraceId&) = default;
};

struct SpanId {
  std::uint64_t value = 0;

  bool valid() const noexcept { return value != 0; }
  std::string to_hex() const;
  static std::optional<SpanId> from_hex(std::string_view hex);

  friend auto operator<=>(const SpanId&, const SpanId&) = default;
};

inline constexpr int kMaxRateExponent = 62;

/// A sampling rate in (0, 1]. Exponent mode stores rate 2^-j exactly;
/// general mode stores an arbitrary real value. Two rates compare equal iff
/// their numeric values are equal, regardless of mode.
class SamplingRate {
public:
  /// Rate 2^-exponent. Throws Error for exponent outside [0, 62].
  static SamplingRate from_exponent(int exponent);
  /// Arbitrary rate. Throws Error for values outside (0, 1].
  static SamplingRate from_value(double value);

  double value() const noexcept { return value_; }
  bool is_exponent_mode() const noexcept { return exponent_.has_value(); }
  /// Exponent for exponent-mode rates, nullopt otherwise.
  std::optional<int> exponent() const noexcept { return exponent_; }
  /// j such that value == 2^-j, for either mode. Used by the exact paths.
  std::optional<int> power_of_two_exponent() const noexcept;

  friend bool operator==(const SamplingRate& a, const SamplingRate& b) noexcept {
    return a.value_ == b.value_;
  }
  friend auto operator<=>(const SamplingRate& a, const SamplingRate& b) noexcept {
    return a.value_ <=> b.value_;
  }

private:
  SamplingRate(double value, std::optional<int> exponent) : value_(value), exponent_(exponent) {}

  double value_ = 1.0;
  std::optional<int> exponent_;
};

inline constexpr std::uint32_t kMaxSkippedCount = 0xFFFF;

/// Reference from a span to its parent or, when the parent was not sampled,
/// to the nearest sampled ancestor.
///
/// A nearest-sampled-ancestor link without an ancestor id means no ancestor
/// was sampled at all; skipped_count then equals the number of ancestors
/// (the span's depth in the original trace).
struct AncestorLink {
  enum class Kind { kRoot, kDirectParent, kNearestSampledAncestor };

  Kind kind = Kind::kRoot;
  std::optional<SpanId> ancestor;
  std::uint32_t skipped_count = 0;

  static AncestorLink root() { return {}; }
  static AncestorLink parent(SpanId id) { return {Kind::kDirectParent, id, 0}; }
  static AncestorLink nearest_sampled(std::optional<SpanId> id, std::uint32_t skipped) {
    return {Kind::kNearestSampledAncestor, id, skipped};
  }

  bool is_root() const noexcept { return kind == Kind::kRoot; }
  /// Edges between this span and the linked ancestor in the original trace.
  std::uint64_t distance() const noexcept { return is_root() ? 0 : 1ULL + skipped_count; }

  friend bool operator==(const AncestorLink&, const AncestorLink&) = default;
};

struct Span {
  TraceId trace_id;
  SpanId span_id;
  AncestorLink link;
  std::string service;
  std::string operation;
  std::int64_t start_micros = 0;
  std::int64_t duration_micros = 0;
  bool error = false;
  SamplingRate rate = SamplingRate::from_exponent(0);
  std::map<std::string, std::string> attributes;

  friend bool operator==(const Span& a, const Span& b) {
    return a.trace_id == b.trace_id && a.span_id == b.span_id && a.link == b.link &&
           a.service == b.service && a.operation == b.operation &&
           a.start_micros == b.start_micros && a.duration_micros == b.duration_micros &&
           a.error == b.error && a.rate == b.rate &&
           a.rate.is_exponent_mode() == b.rate.is_exponent_mode() &&
           a.attributes == b.attributes;
  }
};

/// Shared uniform random number r in [0, 1).
struct SharedRandom {
  double value = 0.0;
};

/// Index i of the interval [2^-(i+1), 2^-i) containing r.
struct SharedIndex {
  int value = 0;
};

using SharedDraw = std::variant<SharedRandom, SharedIndex>;

/// Threshold usable with sample decisions. For an index draw this is the lower
/// interval bound 2^-(i+1), which decides exactly for power-of-two rates.
double threshold_of(const SharedDraw& draw) noexcept;

/// The complete set of spans of one trace, as known to a simulator.
struct FullTrace {
  TraceId trace_id;
  std::vector<Span> spans;
  SharedDraw shared = SharedRandom{0.0};
};

/// Nonempty consistently sampled span subset of one trace.
struct SampledTrace {
  TraceId trace_id;
  std::vector<Span> spans;
};

/// Ascending distinct sampling rates of a span set.
class RateLadder {
public:
  explicit RateLadder(std::vector<SamplingRate> ascending) : rates_(std::move(ascending)) {}

  std::size_t size() const noexcept { return rates_.size(); }
  /// 1-based access matching p_1 < ... < p_n; at(0) is the sentinel 0.
  double at(std::size_t i) const { return i == 0 ? 0.0 : rates_.at(i - 1).value(); }
  const SamplingRate& rung(std::size_t i) const { return rates_.at(i - 1); }
  const std::vector<SamplingRate>& rates() const noexcept { return rates_; }
  double min() const { return rates_.front().value(); }
  double max() const { return rates_.back().value(); }

private:
  std::vector<SamplingRate> rates_;
};

/// Throws Error("empty span set") for an empty input.
RateLadder build_rate_ladder(std::span<const Span> spans);

struct ValidationReport {
  std::vector<std::string> violations;

  bool ok() const noexcept { return violations.empty(); }
  bool mentions(std::string_view needle) const;
};

/// Structural checks on a full trace: ids, single root, acyclic links,
/// link invariants. Findings are reported, never thrown.
ValidationReport validate_trace(const FullTrace& trace);

} // namespace spansketch
