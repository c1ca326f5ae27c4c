// SPDX-License-Identifier: Apache-2.0

#include "spansketch/simulator.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <deque>
#include <unordered_map>
#include <unordered_set>

#include "spansketch/error.hpp"
#include "spansketch/sampler.hpp"

namespace spansketch {

namespace {

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (;;) {
    auto pos = text.find(sep, start);
    parts.push_back(text.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

template <typename T>
T parse_number(std::string_view text, std::string_view what) {
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw Error("bad " + std::string(what) + " '" + std::string(text) + "'");
  }
  return value;
}

int parse_exponent(std::string_view text) {
  int j = parse_number<int>(text, "exponent");
  if (j < 0 || j > kMaxRateExponent) throw Error("exponent out of range: " + std::string(text));
  return j;
}

int clamp_exponent(long long j) {
  return static_cast<int>(std::clamp<long long>(j, 0, kMaxRateExponent));
}

// Knuth's method; fine for the small means used here.
int poisson(Rng& rng, double mean) {
  if (mean <= 0.0) return 0;
  const double limit = std::exp(-mean);
  int k = 0;
  double p = uniform01(rng);
  while (p > limit && k < kMaxFanout) {
    ++k;
    p *= uniform01(rng);
  }
  return k;
}

TraceId random_trace_id(Rng& rng) {
  TraceId id;
  do {
    id = TraceId{rng(), rng()};
  } while (!id.valid());
  return id;
}

} // namespace

RatePolicy RatePolicy::parse(std::string_view text) {
  auto colon = text.find(':');
  if (colon == std::string_view::npos) throw Error("policy needs KIND:ARGS, got '" + std::string(text) + "'");
  std::string_view kind = text.substr(0, colon);
  auto args = split(text.substr(colon + 1), ',');
  RatePolicy p;

  auto want_args = [&](std::size_t lo, std::size_t hi) {
    if (args.size() < lo || args.size() > hi) {
      throw Error("wrong argument count for policy '" + std::string(kind) + "'");
    }
  };

  if (kind == "fixed") {
    want_args(1, 1);
    p.kind = Kind::kFixedExponent;
    p.exponent = parse_exponent(args[0]);
  } else if (kind == "per-service") {
    p.kind = Kind::kPerServiceExponent;
    for (auto entry : args) {
      auto eq = entry.find('=');
      if (eq == std::string_view::npos || eq == 0) throw Error("per-service entries are SVC=J");
      int j = parse_exponent(entry.substr(eq + 1));
      std::string svc(entry.substr(0, eq));
      if (svc == "*") {
        p.exponent = j;
      } else {
        p.per_service[svc] = j;
      }
    }
  } else if (kind == "depth") {
    want_args(2, 2);
    p.kind = Kind::kDepthScaled;
    p.exponent = parse_exponent(args[0]);
    p.slope = parse_number<int>(args[1], "slope");
  } else if (kind == "error-boost") {
    want_args(2, 2);
    p.kind = Kind::kErrorBoosted;
    p.exponent = parse_exponent(args[0]);
    p.error_exponent = parse_exponent(args[1]);
  } else if (kind == "rate-limit") {
    want_args(1, 2);
    p.kind = Kind::kRateLimited;
    p.limit_per_second = parse_number<double>(args[0], "rate limit");
    if (args.size() == 2) p.ewma_alpha = parse_number<double>(args[1], "alpha");
    RateLimiterState::make(p.limit_per_second, p.ewma_alpha); // validates
  } else if (kind == "random") {
    want_args(1, 1);
    p.kind = Kind::kRandomExponent;
    p.exponent = parse_exponent(args[0]);
  } else {
    throw Error("unknown policy '" + std::string(kind) + "'");
  }
  return p;
}

std::string RatePolicy::to_string() const {
  switch (kind) {
    case Kind::kFixedExponent:
      return "fixed:" + std::to_string(exponent);
    case Kind::kPerServiceExponent: {
      std::string s = "per-service:";
      for (const auto& [svc, j] : per_service) s += svc + "=" + std::to_string(j) + ",";
      return s + "*=" + std::to_string(exponent);
    }
    case Kind::kDepthScaled:
      return "depth:" + std::to_string(exponent) + "," + std::to_string(slope);
    case Kind::kErrorBoosted:
      return "error-boost:" + std::to_string(exponent) + "," + std::to_string(error_exponent);
    case Kind::kRateLimited:
      return "rate-limit:" + std::to_string(limit_per_second) + "," + std::to_string(ewma_alpha);
    case Kind::kRandomExponent:
      return "random:" + std::to_string(exponent);
  }
  return "?";
}

void SimulationConfig::validate() const {
  if (!(branching >= 0.0) || !std::isfinite(branching)) throw Error("branching must be >= 0");
  if (max_depth < 1) throw Error("max_depth must be >= 1");
  if (service_pool.empty()) throw Error("service pool is empty");
  if (!(error_rate >= 0.0 && error_rate <= 1.0)) throw Error("error_rate must lie in [0, 1]");
  if (max_spans < 1) throw Error("max_spans must be >= 1");
  if (trace_interval_micros < 0) throw Error("trace interval must be >= 0");
}

FullTrace generate_trace(const SimulationConfig& config, std::uint64_t ordinal) {
  Rng rng = stream_for(config.seed, ordinal);
  FullTrace trace;
  trace.trace_id = random_trace_id(rng);

  const int depth_limit = std::min(config.max_depth, kMaxDepthCap);
  const RatePolicy& policy = config.rate_policy;
  std::unordered_set<std::uint64_t> used_ids;

  struct Pending {
    std::size_t index;
    int depth;
  };
  std::deque<Pending> queue;

  auto make_span = [&](std::optional<std::size_t> parent, int depth) {
    Span s;
    s.trace_id = trace.trace_id;
    do {
      s.span_id = SpanId{rng()};
    } while (!s.span_id.valid() || !used_ids.insert(s.span_id.value).second);
    s.service = config.service_pool[uniform_below(rng, config.service_pool.size())];
    s.operation = s.service + "/op" + std::to_string(uniform_below(rng, 4));
    s.error = uniform01(rng) < config.error_rate;
    s.duration_micros = 100 + static_cast<std::int64_t>(uniform_below(rng, 10000));
    if (parent) {
      const Span& p = trace.spans[*parent];
      s.link = AncestorLink::parent(p.span_id);
      s.start_micros = p.start_micros +
                       static_cast<std::int64_t>(uniform_below(rng, p.duration_micros / 2 + 1));
    } else {
      s.link = AncestorLink::root();
      s.start_micros = static_cast<std::int64_t>(ordinal) * config.trace_interval_micros +
                       static_cast<std::int64_t>(uniform_below(rng, 100));
    }

    int j = 0;
    switch (policy.kind) {
      case RatePolicy::Kind::kFixedExponent:
        j = policy.exponent;
        break;
      case RatePolicy::Kind::kPerServiceExponent: {
        auto it = policy.per_service.find(s.service);
        j = it == policy.per_service.end() ? policy.exponent : it->second;
        break;
      }
      case RatePolicy::Kind::kDepthScaled:
        j = clamp_exponent(static_cast<long long>(policy.exponent) +
                           static_cast<long long>(policy.slope) * depth);
        break;
      case RatePolicy::Kind::kErrorBoosted:
        j = s.error ? policy.error_exponent : policy.exponent;
        break;
      case RatePolicy::Kind::kRateLimited:
        j = 0;
        break;
      case RatePolicy::Kind::kRandomExponent:
        j = static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(policy.exponent) + 1));
        break;
    }
    s.rate = SamplingRate::from_exponent(j);
    trace.spans.push_back(std::move(s));
    queue.push_back({trace.spans.size() - 1, depth});
  };

  make_span(std::nullopt, 0);
  while (!queue.empty()) {
    Pending cur = queue.front();
    queue.pop_front();
    if (cur.depth + 1 >= depth_limit) continue;
    const int children = poisson(rng, config.branching);
    for (int c = 0; c < children && trace.spans.size() < config.max_spans; ++c) {
      make_span(cur.index, cur.depth + 1);
    }
  }

  trace.shared = SharedIndex{draw_shared_index(rng)};
  return trace;
}

std::size_t SimulationResult::complete_traces() const {
  return static_cast<std::size_t>(
      std::count_if(ledger.begin(), ledger.end(), [](const LedgerEntry& e) { return e.complete; }));
}

SimulationResult run_simulation(const SimulationConfig& config) {
  config.validate();
  SimulationResult result;
  std::vector<FullTrace> traces;
  traces.reserve(config.trace_count);
  for (std::uint64_t i = 0; i < config.trace_count; ++i) traces.push_back(generate_trace(config, i));

  if (config.rate_policy.kind == RatePolicy::Kind::kRateLimited) {
    // Rates only depend on arrival times, never on the shared draws.
    struct Arrival {
      std::int64_t start;
      std::size_t trace;
      std::size_t span;
    };
    std::unordered_map<std::string, std::vector<Arrival>> by_service;
    for (std::size_t t = 0; t < traces.size(); ++t) {
      for (std::size_t s = 0; s < traces[t].spans.size(); ++s) {
        by_service[traces[t].spans[s].service].push_back({traces[t].spans[s].start_micros, t, s});
      }
    }
    std::vector<std::string> services;
    for (const auto& [svc, _] : by_service) services.push_back(svc);
    std::sort(services.begin(), services.end());

    Rng rng = stream_for(config.seed, ~std::uint64_t{0});
    for (const auto& svc : services) {
      auto& arrivals = by_service[svc];
      std::sort(arrivals.begin(), arrivals.end(), [](const Arrival& a, const Arrival& b) {
        return std::tie(a.start, a.trace, a.span) < std::tie(b.start, b.trace, b.span);
      });
      RateLimiterState state = RateLimiterState::make(config.rate_policy.limit_per_second,
                                                      config.rate_policy.ewma_alpha);
      for (const Arrival& a : arrivals) {
        auto [next, rho] = rate_limiter_observe(state, a.start);
        state = next;
        traces[a.trace].spans[a.span].rate = discretize_rate(rho, rng);
      }
    }
  }

  for (auto& trace : traces) {
    LedgerEntry entry;
    if (auto sampled = run_trace_sampling(trace)) {
      entry.sampled_span_count = sampled->spans.size();
      for (auto& s : sampled->spans) result.spans.push_back(std::move(s));
    }
    entry.complete = entry.sampled_span_count == trace.spans.size();
    entry.trace = std::move(trace);
    result.ledger.push_back(std::move(entry));
  }

  // Interleave traces as a collector would see them.
  Rng shuffle_rng = stream_for(config.seed, ~std::uint64_t{1});
  for (std::size_t i = result.spans.size(); i > 1; --i) {
    std::swap(result.spans[i - 1], result.spans[uniform_below(shuffle_rng, i)]);
  }
  return result;
}

std::vector<IndexedSample> sort_by_completeness(std::vector<IndexedSample> samples) {
  for (const auto& s : samples) {
    if (!s.shared_index) throw Error("missing shared index for trace " + s.sample.trace_id.to_hex());
  }
  std::stable_sort(samples.begin(), samples.end(), [](const IndexedSample& a, const IndexedSample& b) {
    if (*a.shared_index != *b.shared_index) return *a.shared_index > *b.shared_index;
    return a.sample.trace_id < b.sample.trace_id;
  });
  return samples;
}

FullTrace generate_small_trace(Rng& rng, const SmallTraceOptions& options) {
  FullTrace trace;
  trace.trace_id = random_trace_id(rng);
  const std::size_t count = 1 + uniform_below(rng, std::max<std::size_t>(options.max_spans, 1));

  // General rates come from a small pool so that ladders contain ties.
  std::vector<double> pool;
  if (options.general_rates) {
    const std::size_t pool_size = 1 + uniform_below(rng, count);
    for (std::size_t i = 0; i < pool_size; ++i) pool.push_back(1.0 - uniform01(rng));
  }

  for (std::size_t i = 0; i < count; ++i) {
    Span s;
    s.trace_id = trace.trace_id;
    s.span_id = SpanId{i + 1};
    s.link = i == 0 ? AncestorLink::root() : AncestorLink::parent(SpanId{1 + uniform_below(rng, i)});
    s.service = options.services[uniform_below(rng, options.services.size())];
    s.operation = "op";
    s.start_micros = static_cast<std::int64_t>(i);
    s.duration_micros = 1;
    s.error = uniform01(rng) < options.error_rate;
    if (options.general_rates) {
      s.rate = SamplingRate::from_value(pool[uniform_below(rng, pool.size())]);
    } else {
      s.rate = SamplingRate::from_exponent(
          static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(options.max_exponent) + 1)));
    }
    trace.spans.push_back(std::move(s));
  }
  trace.shared = SharedIndex{draw_shared_index(rng)};
  return trace;
}

} // namespace spansketch
