// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "spansketch/random.hpp"
#include "spansketch/trace_model.hpp"

namespace spansketch {

/// How spans get their sampling rates. All produced exponents lie in [0, 62].
struct RatePolicy {
  enum class Kind {
    kFixedExponent,      // every span 2^-exponent
    kPerServiceExponent, // per_service lookup, else exponent
    kDepthScaled,        // exponent + slope * depth, clamped
    kErrorBoosted,       // error spans error_exponent, others exponent
    kRateLimited,        // per-service limiter, discretized
    kRandomExponent,     // uniform in [0, exponent]; test corpora
  };

  Kind kind = Kind::kFixedExponent;
  int exponent = 0;
  std::map<std::string, int> per_service;
  int slope = 0;
  int error_exponent = 0;
  double limit_per_second = 0.0;
  double ewma_alpha = 0.2;

  /// fixed:J | per-service:SVC=J,...[,*=J] | depth:BASE,SLOPE |
  /// error-boost:NORMAL,ERROR | rate-limit:R[,ALPHA] | random:MAX.
  /// Throws Error on malformed input.
  static RatePolicy parse(std::string_view text);
  std::string to_string() const;
};

struct SimulationConfig {
  std::uint64_t trace_count = 0;
  std::uint64_t seed = 1;
  double branching = 1.5;
  int max_depth = 6;
  std::vector<std::string> service_pool = {"frontend", "auth", "cart", "catalog", "db"};
  double error_rate = 0.05;
  RatePolicy rate_policy;
  std::size_t max_spans = 512;
  /// Spacing of trace start times; drives the rate-limited policy.
  std::int64_t trace_interval_micros = 1000;

  /// Throws Error when a field is out of range.
  void validate() const;
};

inline constexpr int kMaxFanout = 16;
inline constexpr int kMaxDepthCap = 32;

/// Random rooted tree (Galton-Watson, Poisson offspring capped at 16 children
/// and 32 levels) with services, errors, timings, rates per policy and a
/// shared index draw. Deterministic per (seed, ordinal). Under the
/// rate-limited policy all rates are 1 here; run_simulation assigns them.
FullTrace generate_trace(const SimulationConfig& config, std::uint64_t ordinal);

struct LedgerEntry {
  FullTrace trace;
  std::size_t sampled_span_count = 0;
  bool complete = false;
};

struct SimulationResult {
  /// Sampled spans of all traces, interleaved.
  std::vector<Span> spans;
  /// Ground truth, one entry per generated trace.
  std::vector<LedgerEntry> ledger;

  std::size_t complete_traces() const;
};

SimulationResult run_simulation(const SimulationConfig& config);

struct IndexedSample {
  SampledTrace sample;
  std::optional<int> shared_index;
};

/// Most complete first: descending shared index, ties by trace id.
/// Throws Error when an index is missing.
std::vector<IndexedSample> sort_by_completeness(std::vector<IndexedSample> samples);

struct SmallTraceOptions {
  std::size_t max_spans = 8;
  int max_exponent = 6;
  /// Draw general rates in (0, 1] instead of powers of two.
  bool general_rates = false;
  std::vector<std::string> services = {"A", "B", "C", "D"};
  double error_rate = 0.3;
};

/// Small random trace with a uniform random parent for every non-root span;
/// used for exhaustive oracle checks.
FullTrace generate_small_trace(Rng& rng, const SmallTraceOptions& options);

} // namespace spansketch
