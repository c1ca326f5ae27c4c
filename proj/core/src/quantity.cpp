// SPDX-License-Identifier: Apache-2.0

#include "spansketch/quantity.hpp"

#include <algorithm>
#include <cstdint>
#include <unordered_map>

#include "spansketch/error.hpp"
#include "spansketch/sampler.hpp"

namespace spansketch {

namespace {

using IdIndex = std::unordered_map<std::uint64_t, std::size_t>;

IdIndex index_spans(std::span<const Span> spans) {
  IdIndex index;
  index.reserve(spans.size());
  for (std::size_t i = 0; i < spans.size(); ++i) index.emplace(spans[i].span_id.value, i);
  return index;
}

// Index of the linked ancestor when it is present in the set.
std::optional<std::size_t> linked_index(const Span& s, const IdIndex& index) {
  if (!s.link.ancestor) return std::nullopt;
  auto it = index.find(s.link.ancestor->value);
  if (it == index.end()) return std::nullopt;
  return it->second;
}

std::uint64_t max_depth(std::span<const Span> spans) {
  const IdIndex index = index_spans(spans);
  constexpr std::uint64_t kUnknown = ~std::uint64_t{0};
  std::vector<std::uint64_t> depth(spans.size(), kUnknown);
  std::vector<std::size_t> stack;
  std::uint64_t best = 0;

  for (std::size_t start = 0; start < spans.size(); ++start) {
    // Walk up until a span of known depth or a fragment top, then unwind.
    std::size_t cur = start;
    while (depth[cur] == kUnknown) {
      auto up = linked_index(spans[cur], index);
      if (!up || stack.size() > spans.size()) break;
      stack.push_back(cur);
      cur = *up;
    }
    if (depth[cur] == kUnknown) {
      const AncestorLink& link = spans[cur].link;
      // No sampled ancestor at all: skipped_count is the full depth.
      depth[cur] = (!link.is_root() && !link.ancestor) ? link.skipped_count : 0;
    }
    while (!stack.empty()) {
      std::size_t child = stack.back();
      stack.pop_back();
      depth[child] = depth[cur] + spans[child].link.distance();
      cur = child;
    }
    best = std::max(best, depth[start]);
  }
  return best;
}

bool proves_a_calls_b(std::span<const Span> spans, const std::string& a, const std::string& b) {
  const IdIndex index = index_spans(spans);
  for (const Span& s : spans) {
    if (s.service != b) continue;
    const Span* cur = &s;
    for (std::size_t steps = 0; steps <= spans.size(); ++steps) {
      auto up = linked_index(*cur, index);
      if (!up) break;
      cur = &spans[*up];
      if (cur->service == a) return true;
    }
  }
  return false;
}

bool in_closed_range(double v, double a, double b) {
  return a <= b ? (v >= a && v <= b) : (v >= b && v <= a);
}

} // namespace

SpanPredicate service_is(std::string service) {
  return [service = std::move(service)](const Span& s) { return s.service == service; };
}

SpanPredicate has_error() {
  return [](const Span& s) { return s.error; };
}

SetPredicate any_span(SpanPredicate predicate) {
  return [predicate = std::move(predicate)](std::span<const Span> spans) {
    return std::any_of(spans.begin(), spans.end(), predicate);
  };
}

QuantitySpec q_const_one() {
  return {"const-one", [](std::span<const Span>) { return 1.0; }, true, true, true};
}

QuantitySpec q_span_count() {
  return {"span-count", [](std::span<const Span> s) { return static_cast<double>(s.size()); },
          true, true, false};
}

QuantitySpec q_matching_span_count(SpanPredicate predicate, std::string name) {
  return {std::move(name),
          [predicate = std::move(predicate)](std::span<const Span> spans) {
            return static_cast<double>(std::count_if(spans.begin(), spans.end(), predicate));
          },
          true, true, false};
}

QuantitySpec q_trace_indicator(SetPredicate predicate, bool claims_monotonic, std::string name) {
  return {std::move(name),
          [predicate = std::move(predicate)](std::span<const Span> spans) {
            return predicate(spans) ? 1.0 : 0.0;
          },
          claims_monotonic, claims_monotonic, true};
}

QuantitySpec q_call_depth() {
  return {"depth",
          [](std::span<const Span> spans) { return static_cast<double>(max_depth(spans)); }, true,
          true, false};
}

QuantitySpec q_a_calls_b(std::string service_a, std::string service_b) {
  std::string name = "a-calls-b:" + service_a + "," + service_b;
  return q_trace_indicator(
      [a = std::move(service_a), b = std::move(service_b)](std::span<const Span> spans) {
        return proves_a_calls_b(spans, a, b);
      },
      true, std::move(name));
}

QuantitySpec q_a_but_not_b(std::string service_a, std::string service_b) {
  std::string name = "a-not-b:" + service_a + "," + service_b;
  return q_trace_indicator(
      [a = std::move(service_a), b = std::move(service_b)](std::span<const Span> spans) {
        bool has_a = false;
        for (const Span& s : spans) {
          if (s.service == b) return false;
          has_a = has_a || s.service == a;
        }
        return has_a;
      },
      false, std::move(name));
}

ChainCheckReport check_quantity_on_chain(const QuantitySpec& quantity, const FullTrace& trace) {
  ChainCheckReport report;
  if (trace.spans.empty()) return report;
  const RateLadder ladder = build_rate_ladder(trace.spans);
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    report.chain_values.push_back(quantity(downsample(trace.spans, ladder.at(i))));
  }

  const double full = report.chain_values.front();
  for (double v : report.chain_values) {
    if (!in_closed_range(v, 0.0, 2.0 * full)) report.bounded_on_chain = false;
  }
  const auto& cv = report.chain_values;
  for (std::size_t i = 0; i < cv.size(); ++i) {
    for (std::size_t k = i + 1; k < cv.size(); ++k) {
      if (!in_closed_range(cv[k], 0.0, cv[i])) report.monotonic_on_chain = false;
    }
  }

  if (quantity.claims_bounded && !report.bounded_on_chain) {
    report.violations.push_back(quantity.name + ": claimed bounded, chain leaves [0, 2q(S)]");
  }
  if (quantity.claims_monotonic && !report.monotonic_on_chain) {
    report.violations.push_back(quantity.name + ": claimed monotonic, chain increases on removal");
  }
  if (quantity.indicator) {
    for (double v : cv) {
      if (v != 0.0 && v != 1.0) {
        report.violations.push_back(quantity.name + ": indicator returned a non-0/1 value");
        break;
      }
    }
  }
  return report;
}

namespace {

SpanPredicate parse_predicate(std::string_view text) {
  if (text == "error") return has_error();
  constexpr std::string_view kService = "service=";
  if (text.substr(0, kService.size()) == kService && text.size() > kService.size()) {
    return service_is(std::string(text.substr(kService.size())));
  }
  throw Error("unknown predicate '" + std::string(text) + "' (expected error or service=NAME)");
}

std::pair<std::string, std::string> parse_pair(std::string_view args) {
  auto comma = args.find(',');
  if (comma == std::string_view::npos || comma == 0 || comma + 1 == args.size()) {
    throw Error("expected two services A,B");
  }
  return {std::string(args.substr(0, comma)), std::string(args.substr(comma + 1))};
}

} // namespace

QuantitySpec parse_quantity(std::string_view text) {
  auto colon = text.find(':');
  std::string_view name = text.substr(0, colon);
  std::string_view args = colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);
  bool has_args = colon != std::string_view::npos;
  auto no_args = [&] {
    if (has_args) throw Error("quantity '" + std::string(name) + "' takes no arguments");
  };

  if (name == "const-one") {
    no_args();
    return q_const_one();
  }
  if (name == "span-count") {
    no_args();
    return q_span_count();
  }
  if (name == "depth") {
    no_args();
    return q_call_depth();
  }
  if (name == "match-spans") {
    return q_matching_span_count(parse_predicate(args), std::string(text));
  }
  if (name == "trace-has") {
    return q_trace_indicator(any_span(parse_predicate(args)), true, std::string(text));
  }
  if (name == "a-calls-b") {
    auto [a, b] = parse_pair(args);
    return q_a_calls_b(a, b);
  }
  if (name == "a-not-b") {
    auto [a, b] = parse_pair(args);
    return q_a_but_not_b(a, b);
  }
  throw Error("unknown quantity '" + std::string(text) + "'");
}

} // namespace spansketch
