// SPDX-License-Identifier: Apache-2.0

#include "spansketch/trace_model.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "spansketch/error.hpp"

namespace spansketch {

namespace {

constexpr char kHexDigits[] = "0123456789abcdef";

void append_hex(std::string& out, std::uint64_t v) {
  for (int shift = 60; shift >= 0; shift -= 4) {
    out.push_back(kHexDigits[(v >> shift) & 0xF]);
  }
}

// Lowercase only; the wire format is fixed-width lowercase.
std::optional<std::uint64_t> parse_hex64(std::string_view hex) {
  std::uint64_t v = 0;
  for (char c : hex) {
    int d;
    if (c >= '0' && c <= '9') {
      d = c - '0';
    } else if (c >= 'a' && c <= 'f') {
      d = c - 'a' + 10;
    } else {
      return std::nullopt;
    }
    v = (v << 4) | static_cast<std::uint64_t>(d);
  }
  return v;
}

const char* kind_name(AncestorLink::Kind kind) {
  switch (kind) {
    case AncestorLink::Kind::kRoot:
      return "root";
    case AncestorLink::Kind::kDirectParent:
      return "direct-parent";
    case AncestorLink::Kind::kNearestSampledAncestor:
      return "nearest-sampled-ancestor";
  }
  return "?";
}

} // namespace

std::string TraceId::to_hex() const {
  std::string out;
  out.reserve(32);
  append_hex(out, high);
  append_hex(out, low);
  return out;
}

std::optional<TraceId> TraceId::from_hex(std::string_view hex) {
  if (hex.size() != 32) return std::nullopt;
  auto hi = parse_hex64(hex.substr(0, 16));
  auto lo = parse_hex64(hex.substr(16));
  if (!hi || !lo) return std::nullopt;
  return TraceId{*hi, *lo};
}

std::string SpanId::to_hex() const {
  std::string out;
  out.reserve(16);
  append_hex(out, value);
  return out;
}

std::optional<SpanId> SpanId::from_hex(std::string_view hex) {
  if (hex.size() != 16) return std::nullopt;
  auto v = parse_hex64(hex);
  if (!v) return std::nullopt;
  return SpanId{*v};
}

SamplingRate SamplingRate::from_exponent(int exponent) {
  if (exponent < 0 || exponent > kMaxRateExponent) {
    throw Error("exponent out of range: " + std::to_string(exponent));
  }
  return SamplingRate(std::ldexp(1.0, -exponent), exponent);
}

SamplingRate SamplingRate::from_value(double value) {
  if (!(value > 0.0 && value <= 1.0)) {
    throw Error("sampling rate must lie in (0, 1]");
  }
  return SamplingRate(value, std::nullopt);
}

std::optional<int> SamplingRate::power_of_two_exponent() const noexcept {
  if (exponent_) return exponent_;
  int e = 0;
  double mantissa = std::frexp(value_, &e);
  // value = 0.5 * 2^e = 2^(e-1) = 2^-j
  if (mantissa != 0.5) return std::nullopt;
  int j = 1 - e;
  if (j < 0 || j > kMaxRateExponent) return std::nullopt;
  return j;
}

double threshold_of(const SharedDraw& draw) noexcept {
  if (const auto* r = std::get_if<SharedRandom>(&draw)) return r->value;
  return std::ldexp(1.0, -(std::get<SharedIndex>(draw).value + 1));
}

RateLadder build_rate_ladder(std::span<const Span> spans) {
  if (spans.empty()) throw Error("empty span set");
  std::vector<SamplingRate> rates;
  rates.reserve(spans.size());
  for (const auto& s : spans) rates.push_back(s.rate);
  std::sort(rates.begin(), rates.end());
  rates.erase(std::unique(rates.begin(), rates.end()), rates.end());
  return RateLadder(std::move(rates));
}

bool ValidationReport::mentions(std::string_view needle) const {
  return std::any_of(violations.begin(), violations.end(),
                     [&](const std::string& v) { return v.find(needle) != std::string::npos; });
}

ValidationReport validate_trace(const FullTrace& trace) {
  ValidationReport report;
  auto add = [&](std::string msg) { report.violations.push_back(std::move(msg)); };

  if (!trace.trace_id.valid()) add("zero trace id");
  if (trace.spans.empty()) {
    add("empty trace");
    return report;
  }

  std::unordered_map<std::uint64_t, std::size_t> index;
  std::size_t roots = 0;
  for (std::size_t i = 0; i < trace.spans.size(); ++i) {
    const Span& s = trace.spans[i];
    const std::string id = s.span_id.to_hex();
    if (!s.span_id.valid()) add("zero span id");
    if (!index.emplace(s.span_id.value, i).second) add("duplicate span id " + id);
    if (s.trace_id != trace.trace_id) add("span " + id + " has foreign trace id");
    if (!(s.rate.value() > 0.0 && s.rate.value() <= 1.0)) add("span " + id + " rate out of range");
    if (s.duration_micros < 0) add("span " + id + " negative duration");

    const AncestorLink& link = s.link;
    switch (link.kind) {
      case AncestorLink::Kind::kRoot:
        ++roots;
        if (link.ancestor) add("span " + id + " root link carries an ancestor id");
        break;
      case AncestorLink::Kind::kDirectParent:
        if (link.skipped_count != 0) add("span " + id + " direct-parent link with skipped count");
        if (!link.ancestor) add("span " + id + " direct-parent link without id");
        break;
      case AncestorLink::Kind::kNearestSampledAncestor:
        if (link.skipped_count < 1) add("span " + id + " ancestor link with zero skipped count");
        break;
    }
    if (link.skipped_count >= kMaxSkippedCount) add("span " + id + " skipped count saturated");
    if (link.ancestor && *link.ancestor == s.span_id) add("cycle: span " + id + " links to itself");
  }
  if (roots == 0) add("no root span");
  if (roots > 1) add("multiple roots");

  // Follow links upwards; a walk longer than the span count means a cycle.
  std::unordered_set<std::uint64_t> reported;
  for (const Span& s : trace.spans) {
    const Span* cur = &s;
    std::size_t steps = 0;
    while (cur->link.ancestor) {
      auto it = index.find(cur->link.ancestor->value);
      if (it == index.end()) {
        if (steps == 0)
          add("span " + cur->span_id.to_hex() + " links to unknown " +
            std::string(kind_name(cur->link.kind)) + " " + cur->link.ancestor->to_hex());
        break;
      }
      cur = &trace.spans[it->second];
      if (++steps > trace.spans.size()) {
        if (reported.insert(s.span_id.value).second) {
          add("cycle through span " + s.span_id.to_hex());
        }
        break;
      }
    }
  }
  return report;
}

} // namespace spansketch
