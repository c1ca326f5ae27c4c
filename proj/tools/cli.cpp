// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "spansketch/error.hpp"
#include "spansketch/estimator.hpp"
#include "spansketch/io.hpp"
#include "spansketch/simulator.hpp"
#include "spansketch/verify.hpp"

namespace spansketch::cli {

namespace {

using nlohmann::ordered_json;

/// Usage problems detected after CLI11 parsing succeeded.
struct UsageError : Error {
  using Error::Error;
};

unsigned thread_budget() {
  const char* env = std::getenv("SPANSKETCH_THREADS");
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (!env || !*env) return hw;
  char* end = nullptr;
  long v = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || v < 1) return 1;
  return std::min<unsigned>(static_cast<unsigned>(v), hw);
}

QuantitySpec quantity_or_usage(const std::string& text) {
  try {
    return parse_quantity(text);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

ordered_json numeric_json(const Numeric& n) {
  if (n.exact) return *n.exact;
  return n.value;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  return out;
}

struct SimulateArgs {
  std::uint64_t traces = 0;
  std::uint64_t seed = 0;
  std::string policy = "fixed:0";
  std::string out;
  std::string ledger;
  double branching = 1.5;
  int max_depth = 6;
  double error_rate = 0.05;
  std::vector<std::string> services;
  std::size_t max_spans = 512;
  std::int64_t interval_us = 1000;
  bool json = false;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  SimulationConfig config;
  try {
    config.rate_policy = RatePolicy::parse(a.policy);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  config.trace_count = a.traces;
  config.seed = a.seed;
  config.branching = a.branching;
  config.max_depth = a.max_depth;
  config.error_rate = a.error_rate;
  if (!a.services.empty()) config.service_pool = a.services;
  config.max_spans = a.max_spans;
  config.trace_interval_micros = a.interval_us;
  try {
    config.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }

  const SimulationResult result = run_simulation(config);
  {
    auto spans_out = open_output(a.out);
    io::write_spans(spans_out, result.spans);
    auto ledger_out = open_output(a.ledger);
    io::write_ledger(ledger_out, result.ledger);
  }

  const double complete_fraction =
      result.ledger.empty() ? 0.0
                            : static_cast<double>(result.complete_traces()) /
                                  static_cast<double>(result.ledger.size());
  out << "traces " << result.ledger.size() << "\n";
  out << "spans emitted " << result.spans.size() << "\n";
  out << "complete fraction " << fmt_double(complete_fraction) << "\n";
  if (a.json) {
    ordered_json j;
    j["command"] = "simulate";
    j["traces"] = result.ledger.size();
    j["spans_emitted"] = result.spans.size();
    j["complete_traces"] = result.complete_traces();
    j["complete_fraction"] = complete_fraction;
    j["policy"] = config.rate_policy.to_string();
    out << j.dump() << "\n";
  }
  return kExitOk;
}

struct EstimateArgs {
  std::string in;
  std::string quantity;
  bool per_trace = false;
  bool json = false;
};

int cmd_estimate(const EstimateArgs& a, std::ostream& out) {
  const QuantitySpec q = quantity_or_usage(a.quantity);
  auto in = open_input(a.in);
  const auto spans = io::read_spans(in);
  const auto traces = io::reassemble(spans);

  CompositeOptions options;
  options.keep_terms = a.per_trace;
  options.threads = thread_budget();
  const EstimateReport report = composite_estimate(traces, q, options);

  if (report.per_trace_terms) {
    for (const auto& [id, term] : *report.per_trace_terms) {
      out << "trace " << id.to_hex() << " " << term.to_string() << "\n";
    }
  }
  out << "estimate " << report.estimate.to_string() << "\n";
  out << "contributing traces " << report.contributing_traces << "\n";
  for (const auto& w : report.warnings) out << "warning: " << w << "\n";
  if (a.json) {
    ordered_json j;
    j["command"] = "estimate";
    j["quantity"] = q.name;
    j["estimate"] = numeric_json(report.estimate);
    j["integer"] = report.estimate.is_integer();
    j["contributing_traces"] = report.contributing_traces;
    out << j.dump() << "\n";
  }
  return kExitOk;
}

struct VarianceArgs {
  std::string ledger;
  std::string quantity;
  bool json = false;
};

std::string ratio_text(double num, double den) {
  if (den == 0.0) return num == 0.0 ? "n/a" : "inf";
  return fmt_double(num / den);
}

int cmd_variance(const VarianceArgs& a, std::ostream& out) {
  const QuantitySpec q = quantity_or_usage(a.quantity);
  auto in = open_input(a.ledger);
  const auto entries = io::read_ledger(in);

  double total_new = 0.0;
  double total_naive = 0.0;
  bool all_exact = true;
  std::int64_t exact_new = 0;
  std::int64_t exact_naive = 0;
  for (const LedgerEntry& e : entries) {
    const Numeric vn = variance_new_exact(e.trace, q);
    const Numeric vv = variance_naive_exact(e.trace, q);
    out << "trace " << e.trace.trace_id.to_hex() << " new " << vn.to_string() << " naive "
        << vv.to_string() << " ratio " << ratio_text(vn.value, vv.value) << "\n";
    total_new += vn.value;
    total_naive += vv.value;
    if (all_exact && vn.exact && vv.exact &&
        !__builtin_add_overflow(exact_new, *vn.exact, &exact_new) &&
        !__builtin_add_overflow(exact_naive, *vv.exact, &exact_naive)) {
      continue;
    }
    all_exact = false;
  }
  Numeric tn{total_new, std::nullopt, false};
  Numeric tv{total_naive, std::nullopt, false};
  if (all_exact) {
    tn = Numeric{static_cast<double>(exact_new), exact_new, false};
    tv = Numeric{static_cast<double>(exact_naive), exact_naive, false};
  }
  out << "total new " << tn.to_string() << " naive " << tv.to_string() << " ratio "
      << ratio_text(tn.value, tv.value) << "\n";
  if (a.json) {
    ordered_json j;
    j["command"] = "variance";
    j["quantity"] = q.name;
    j["traces"] = entries.size();
    j["variance_new"] = numeric_json(tn);
    j["variance_naive"] = numeric_json(tv);
    if (tv.value != 0.0) {
      j["ratio"] = tn.value / tv.value;
    } else {
      j["ratio"] = nullptr;
    }
    out << j.dump() << "\n";
  }
  return kExitOk;
}

struct VerifyArgs {
  std::uint64_t seed = 0;
  std::uint64_t cases = 200;
  std::size_t max_spans = 8;
  int max_exponent = 6;
  bool inject_bias = false;
  bool json = false;
};

int cmd_verify(const VerifyArgs& a, std::ostream& out) {
  VerifyOptions options;
  options.seed = a.seed;
  options.cases = a.cases;
  options.max_spans = a.max_spans;
  options.max_exponent = a.max_exponent;
  if (a.inject_bias) options.estimator_override = min_rate_weighted_estimate;

  const VerifyReport report = run_verification(options);
  out << "verify: " << report.cases << " cases, " << report.checks << " checks, "
      << report.failures << " failures\n";
  if (report.cases == 0) out << "note: 0 cases requested, nothing to check\n";
  if (report.first_counterexample) out << "counterexample: " << *report.first_counterexample << "\n";
  if (a.json) {
    ordered_json j;
    j["command"] = "verify";
    j["cases"] = report.cases;
    j["checks"] = report.checks;
    j["failures"] = report.failures;
    j["passed"] = report.ok();
    out << j.dump() << "\n";
  }
  return report.ok() ? kExitOk : kExitFailure;
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Consistent partial trace sampling and unbiased estimation toolkit", "spansketch"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Generate traces, sample them, write spans and ledger");
  simulate->add_option("--traces", sim.traces, "Number of traces")->required();
  simulate->add_option("--seed", sim.seed, "Random seed")->required();
  simulate->add_option("--policy", sim.policy,
                       "fixed:J | per-service:SVC=J,...[,*=J] | depth:BASE,SLOPE | "
                       "error-boost:NORMAL,ERROR | rate-limit:R[,ALPHA] | random:MAX")
      ->capture_default_str();
  simulate->add_option("--out", sim.out, "Span JSONL output")->required();
  simulate->add_option("--ledger", sim.ledger, "Ground-truth ledger JSONL output")->required();
  simulate->add_option("--branching", sim.branching, "Mean children per span")->capture_default_str();
  simulate->add_option("--max-depth", sim.max_depth, "Maximum levels (1 = root only)")->capture_default_str();
  simulate->add_option("--error-rate", sim.error_rate, "Probability of an error span")->capture_default_str();
  simulate->add_option("--services", sim.services, "Service pool")->delimiter(',');
  simulate->add_option("--max-spans", sim.max_spans, "Span cap per trace")->capture_default_str();
  simulate->add_option("--trace-interval-us", sim.interval_us, "Spacing of trace start times")
      ->capture_default_str();
  simulate->add_flag("--json", sim.json, "Append a JSON summary line");

  EstimateArgs est;
  auto* estimate = app.add_subcommand("estimate", "Composite estimate from a sampled span file");
  estimate->add_option("--in", est.in, "Span JSONL input")->required();
  estimate->add_option("--quantity", est.quantity,
                       "const-one | span-count | depth | match-spans:PRED | trace-has:PRED | "
                       "a-calls-b:A,B | a-not-b:A,B  (PRED: error | service=NAME)")
      ->required();
  estimate->add_flag("--per-trace", est.per_trace, "Print per-trace terms");
  estimate->add_flag("--json", est.json, "Append a JSON summary line");

  VarianceArgs var;
  auto* variance = app.add_subcommand("variance", "Exact variances of both estimators from a ledger");
  variance->add_option("--ledger", var.ledger, "Ledger JSONL input")->required();
  variance->add_option("--quantity", var.quantity, "Quantity, as for estimate")->required();
  variance->add_flag("--json", var.json, "Append a JSON summary line");

  VerifyArgs ver;
  auto* verify = app.add_subcommand("verify", "Run the exhaustive oracle checks on random traces");
  verify->add_option("--seed", ver.seed, "Random seed")->required();
  verify->add_option("--cases", ver.cases, "Number of random traces")->capture_default_str();
  verify->add_option("--max-spans", ver.max_spans, "Spans per trace, at most")
      ->capture_default_str()
      ->check(CLI::Range(1, 16));
  verify->add_option("--max-exponent", ver.max_exponent, "Largest rate exponent")
      ->capture_default_str()
      ->check(CLI::Range(0, 40));
  verify->add_flag("--inject-bias", ver.inject_bias,
                   "Self-test: swap in a biased estimator, which must be rejected");
  verify->add_flag("--json", ver.json, "Append a JSON summary line");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*simulate) return cmd_simulate(sim, out);
    if (*estimate) return cmd_estimate(est, out);
    if (*variance) return cmd_variance(var, out);
    if (*verify) return cmd_verify(ver, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

} // namespace spansketch::cli
