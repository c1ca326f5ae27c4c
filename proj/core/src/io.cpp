// SPDX-License-Identifier: Apache-2.0

#include "spansketch/io.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "spansketch/error.hpp"

namespace spansketch::io {

namespace {

using nlohmann::json;
using ordered = nlohmann::ordered_json;

ordered span_to_json(const Span& s) {
  ordered j;
  j["trace_id"] = s.trace_id.to_hex();
  j["span_id"] = s.span_id.to_hex();
  ordered link;
  switch (s.link.kind) {
    case AncestorLink::Kind::kRoot:
      link["kind"] = "root";
      break;
    case AncestorLink::Kind::kDirectParent:
      link["kind"] = "parent";
      break;
    case AncestorLink::Kind::kNearestSampledAncestor:
      link["kind"] = "ancestor";
      break;
  }
  if (s.link.ancestor) link["ancestor_span_id"] = s.link.ancestor->to_hex();
  if (s.link.kind == AncestorLink::Kind::kNearestSampledAncestor) link["skipped"] = s.link.skipped_count;
  j["link"] = std::move(link);
  j["service"] = s.service;
  j["op"] = s.operation;
  j["start_us"] = s.start_micros;
  j["dur_us"] = s.duration_micros;
  j["error"] = s.error;
  if (auto e = s.rate.exponent()) {
    j["rate_exp"] = *e;
  } else {
    j["rate"] = s.rate.value();
  }
  if (!s.attributes.empty()) j["attrs"] = s.attributes;
  return j;
}

template <typename T>
T required(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw Error(std::string("missing key \"") + key + "\"");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw Error(std::string("wrong type for \"") + key + "\"");
  }
}

SpanId parse_span_id(const std::string& hex, const char* what) {
  auto id = SpanId::from_hex(hex);
  if (!id) throw Error(std::string("invalid hex width or digits in ") + what + ": \"" + hex + "\"");
  return *id;
}

Span span_from_json(const json& j) {
  if (!j.is_object()) throw Error("span record is not an object");
  Span s;
  const auto trace_hex = required<std::string>(j, "trace_id");
  auto tid = TraceId::from_hex(trace_hex);
  if (!tid) throw Error("invalid hex width or digits in trace_id: \"" + trace_hex + "\"");
  s.trace_id = *tid;
  s.span_id = parse_span_id(required<std::string>(j, "span_id"), "span_id");

  const json link = required<json>(j, "link");
  if (!link.is_object()) throw Error("link is not an object");
  const auto kind = required<std::string>(link, "kind");
  const bool has_skipped = link.contains("skipped");
  const bool has_ancestor = link.contains("ancestor_span_id");
  if (kind == "root") {
    if (has_skipped || has_ancestor) throw Error("root link carries ancestor fields");
    s.link = AncestorLink::root();
  } else if (kind == "parent") {
    if (has_skipped) throw Error("skipped only allowed for ancestor links");
    s.link = AncestorLink::parent(
        parse_span_id(required<std::string>(link, "ancestor_span_id"), "ancestor_span_id"));
  } else if (kind == "ancestor") {
    if (!has_skipped) throw Error("ancestor link without skipped");
    auto skipped = required<std::int64_t>(link, "skipped");
    if (skipped < 1 || skipped > kMaxSkippedCount) throw Error("skipped out of range");
    std::optional<SpanId> anc;
    if (has_ancestor) {
      anc = parse_span_id(required<std::string>(link, "ancestor_span_id"), "ancestor_span_id");
    }
    s.link = AncestorLink::nearest_sampled(anc, static_cast<std::uint32_t>(skipped));
  } else {
    throw Error("unknown link kind \"" + kind + "\"");
  }

  s.service = required<std::string>(j, "service");
  s.operation = required<std::string>(j, "op");
  s.start_micros = required<std::int64_t>(j, "start_us");
  s.duration_micros = required<std::int64_t>(j, "dur_us");
  if (s.duration_micros < 0) throw Error("negative dur_us");
  s.error = required<bool>(j, "error");

  const bool has_exp = j.contains("rate_exp");
  const bool has_rate = j.contains("rate");
  if (has_exp && has_rate) throw Error("both rate_exp and rate present");
  if (!has_exp && !has_rate) throw Error("missing rate_exp or rate");
  if (has_exp) {
    const json& e = j["rate_exp"];
    if (!e.is_number_integer()) throw Error("wrong type for \"rate_exp\"");
    auto exp = e.get<std::int64_t>();
    if (exp < 0 || exp > kMaxRateExponent) throw Error("exponent out of range: " + std::to_string(exp));
    s.rate = SamplingRate::from_exponent(static_cast<int>(exp));
  } else {
    s.rate = SamplingRate::from_value(required<double>(j, "rate"));
  }

  if (auto it = j.find("attrs"); it != j.end()) {
    if (!it->is_object()) throw Error("attrs is not an object");
    for (const auto& [k, v] : it->items()) {
      if (!v.is_string()) throw Error("attribute values must be strings");
      s.attributes.emplace(k, v.get<std::string>());
    }
  }
  return s;
}

bool is_header(const json& j) {
  return j.is_object() && j.contains("v") && !j.contains("trace_id");
}

template <typename Fn>
void for_each_record(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(line_no, std::string("malformed JSON: ") + e.what());
    }
    if (is_header(j)) continue;
    try {
      fn(j);
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(line_no, e.what());
    }
  }
}

} // namespace

std::string encode_span(const Span& span) { return span_to_json(span).dump(); }

Span decode_span(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw Error(std::string("malformed JSON: ") + e.what());
  }
  return span_from_json(j);
}

void write_spans(std::ostream& out, std::span<const Span> spans) {
  for (const Span& s : spans) out << encode_span(s) << '\n';
}

std::vector<Span> read_spans(std::istream& in) {
  std::vector<Span> spans;
  for_each_record(in, [&](const json& j) { spans.push_back(span_from_json(j)); });
  return spans;
}

std::vector<SampledTrace> reassemble(std::span<const Span> spans) {
  std::vector<SampledTrace> traces;
  std::map<TraceId, std::size_t> slot;
  std::vector<std::unordered_set<std::uint64_t>> ids;
  for (const Span& s : spans) {
    auto [it, inserted] = slot.emplace(s.trace_id, traces.size());
    if (inserted) {
      traces.push_back(SampledTrace{s.trace_id, {}});
      ids.emplace_back();
    }
    if (!ids[it->second].insert(s.span_id.value).second) {
      throw Error("duplicate span id " + s.span_id.to_hex() + " in trace " + s.trace_id.to_hex());
    }
    traces[it->second].spans.push_back(s);
  }
  return traces;
}

void write_ledger(std::ostream& out, std::span<const LedgerEntry> entries) {
  for (const LedgerEntry& e : entries) {
    ordered j;
    j["trace_id"] = e.trace.trace_id.to_hex();
    if (const auto* idx = std::get_if<SharedIndex>(&e.trace.shared)) {
      j["shared_index"] = idx->value;
    } else {
      j["shared_random"] = std::get<SharedRandom>(e.trace.shared).value;
    }
    j["complete"] = e.complete;
    j["sampled"] = e.sampled_span_count;
    ordered spans = ordered::array();
    for (const Span& s : e.trace.spans) spans.push_back(span_to_json(s));
    j["spans"] = std::move(spans);
    out << j.dump() << '\n';
  }
}

std::vector<LedgerEntry> read_ledger(std::istream& in) {
  std::vector<LedgerEntry> entries;
  for_each_record(in, [&](const json& j) {
    if (!j.is_object()) throw Error("ledger record is not an object");
    LedgerEntry e;
    const auto hex = required<std::string>(j, "trace_id");
    auto tid = TraceId::from_hex(hex);
    if (!tid) throw Error("invalid hex width or digits in trace_id: \"" + hex + "\"");
    e.trace.trace_id = *tid;
    if (j.contains("shared_index")) {
      auto i = required<int>(j, "shared_index");
      if (i < 0 || i > kMaxRateExponent) throw Error("shared_index out of range");
      e.trace.shared = SharedIndex{i};
    } else {
      e.trace.shared = SharedRandom{required<double>(j, "shared_random")};
    }
    e.complete = required<bool>(j, "complete");
    e.sampled_span_count = required<std::size_t>(j, "sampled");
    const json spans = required<json>(j, "spans");
    if (!spans.is_array()) throw Error("spans is not an array");
    for (const json& s : spans) {
      Span span = span_from_json(s);
      if (span.trace_id != e.trace.trace_id) throw Error("span with foreign trace id in ledger");
      e.trace.spans.push_back(std::move(span));
    }
    entries.push_back(std::move(e));
  });
  return entries;
}

} // namespace spansketch::io
