// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "spansketch/error.hpp"
#include "spansketch/io.hpp"
#include "spansketch/simulator.hpp"
#include "test_support.hpp"

using namespace spansketch;
using namespace spansketch::testing;

namespace {

std::vector<Span> round_trip(const std::vector<Span>& spans) {
  std::stringstream buf;
  io::write_spans(buf, spans);
  return io::read_spans(buf);
}

std::string valid_line(std::string_view rate_fields = R"("rate_exp":2)") {
  return std::string(R"({"trace_id":"0000000000000000000000000000abcd","span_id":"0000000000000001",)"
                     R"("link":{"kind":"root"},"service":"s","op":"o","start_us":0,"dur_us":1,)"
                     R"("error":false,)") +
         std::string(rate_fields) + "}";
}

std::string error_of(const std::string& text) {
  std::istringstream in(text);
  try {
    io::read_spans(in);
  } catch (const ParseError& e) {
    return e.what();
  }
  return "";
}

} // namespace

TEST(SpanRecords, EncodeLayout) {
  Span s = span(1, std::nullopt, exp_rate(3), "auth", true);
  s.attributes["k"] = "v";
  EXPECT_EQ(io::encode_span(s),
            R"({"trace_id":"0000000000abcdef0000000000001234","span_id":"0000000000000001",)"
            R"("link":{"kind":"root"},"service":"auth","op":"op","start_us":0,"dur_us":0,)"
            R"("error":true,"rate_exp":3,"attrs":{"k":"v"}})");
  Span linked = span(2, 1, exp_rate(0));
  linked.link = AncestorLink::nearest_sampled(SpanId{1}, 4);
  EXPECT_NE(io::encode_span(linked).find(R"("link":{"kind":"ancestor","ancestor_span_id":"0000000000000001","skipped":4})"),
            std::string::npos);
  linked.link = AncestorLink::nearest_sampled(std::nullopt, 2);
  EXPECT_NE(io::encode_span(linked).find(R"("link":{"kind":"ancestor","skipped":2})"), std::string::npos);
}

TEST(SpanRecords, RoundTripGeneratedStreams) {
  for (const char* policy : {"random:10", "rate-limit:200", "per-service:auth=0,*=3"}) {
    SimulationConfig c;
    c.trace_count = 300;
    c.seed = 2;
    c.rate_policy = RatePolicy::parse(policy);
    const auto sim = run_simulation(c);
    EXPECT_EQ(round_trip(sim.spans), sim.spans) << policy;
  }
}

TEST(SpanRecords, RoundTripGeneralRatesAndLinks) {
  Rng rng(3);
  SmallTraceOptions opts;
  opts.general_rates = true;
  for (int i = 0; i < 200; ++i) {
    auto t = generate_small_trace(rng, opts);
    t.spans[0].attributes["x"] = "y \"quoted\" é";
    const auto sampled = downsample(t.spans, uniform01(rng));
    EXPECT_EQ(round_trip(t.spans), t.spans);
    EXPECT_EQ(round_trip(sampled), sampled);
  }
}

TEST(SpanRecords, EmptyFileHeaderAndBlankLines) {
  std::istringstream empty("");
  EXPECT_TRUE(io::read_spans(empty).empty());
  std::istringstream with_header("{\"v\":1}\n\n" + valid_line() + "\n   \n");
  EXPECT_EQ(io::read_spans(with_header).size(), 1u);
}

TEST(SpanRecords, UnknownKeysIgnored) {
  std::string line = valid_line(R"("rate_exp":2,"extra":{"nested":[1,2]})");
  std::istringstream in(line);
  const auto spans = io::read_spans(in);
  ASSERT_EQ(spans.size(), 1u);
  EXPECT_EQ(*spans[0].rate.exponent(), 2);
}

TEST(SpanRecords, Errors) {
  EXPECT_NE(error_of(valid_line(R"("rate_exp":63)")).find("exponent out of range"), std::string::npos);
  EXPECT_NE(error_of(valid_line(R"("rate_exp":1,"rate":0.5)")).find("both rate_exp and rate present"),
            std::string::npos);
  EXPECT_NE(error_of(valid_line(R"("rate":0)")).find("rate"), std::string::npos);
  EXPECT_NE(error_of(valid_line("\"rate_exp\":1") + "\n{broken").find("line 2"), std::string::npos);

  std::string short_hex = valid_line();
  short_hex.replace(short_hex.find("0000000000000001"), 16, "01");
  EXPECT_NE(error_of(short_hex).find("invalid hex width"), std::string::npos);

  std::string upper = valid_line();
  upper.replace(upper.find("abcd"), 4, "ABCD");
  EXPECT_NE(error_of(upper).find("invalid hex"), std::string::npos);

  std::string bad_link = valid_line();
  bad_link.replace(bad_link.find(R"({"kind":"root"})"), 15, R"({"kind":"parent","ancestor_span_id":"0000000000000002","skipped":1})");
  EXPECT_NE(error_of(bad_link).find("skipped"), std::string::npos);
}

TEST(SpanRecords, ParseErrorCarriesLine) {
  std::istringstream in(valid_line() + "\n" + valid_line() + "\nnot json\n");
  try {
    io::read_spans(in);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(Reassemble, GroupsInterleavedTraces) {
  auto a1 = span(1, std::nullopt, exp_rate(0));
  auto a2 = span(2, 1, exp_rate(0));
  auto b1 = span(1, std::nullopt, exp_rate(0));
  b1.trace_id = TraceId{9, 9};
  const auto traces = io::reassemble(std::vector<Span>{a1, b1, a2});
  ASSERT_EQ(traces.size(), 2u);
  EXPECT_EQ(traces[0].trace_id, kTrace);
  EXPECT_EQ(traces[0].spans.size(), 2u);
  EXPECT_EQ(traces[1].trace_id, (TraceId{9, 9}));

  EXPECT_EQ(io::reassemble(std::vector<Span>{a1}).size(), 1u);
  EXPECT_TRUE(io::reassemble(std::vector<Span>{}).empty());
  EXPECT_THROW(io::reassemble(std::vector<Span>{a1, a2, a1}), Error);
}

TEST(Reassemble, MembershipIsPermutationInvariant) {
  SimulationConfig c;
  c.trace_count = 200;
  c.rate_policy = RatePolicy::parse("random:3");
  auto spans = run_simulation(c).spans;
  auto membership = [](const std::vector<SampledTrace>& traces) {
    std::map<TraceId, std::set<std::uint64_t>> m;
    for (const auto& t : traces) {
      for (const auto& s : t.spans) m[t.trace_id].insert(s.span_id.value);
    }
    return m;
  };
  const auto expected = membership(io::reassemble(spans));
  Rng rng(4);
  for (int i = 0; i < 5; ++i) {
    std::shuffle(spans.begin(), spans.end(), rng);
    EXPECT_EQ(membership(io::reassemble(spans)), expected);
  }
}

TEST(Ledger, RoundTrip) {
  SimulationConfig c;
  c.trace_count = 100;
  c.rate_policy = RatePolicy::parse("random:4");
  auto ledger = run_simulation(c).ledger;
  ledger.front().trace.shared = SharedRandom{0.375};
  std::stringstream buf;
  io::write_ledger(buf, ledger);
  const auto back = io::read_ledger(buf);
  ASSERT_EQ(back.size(), ledger.size());
  for (std::size_t i = 0; i < ledger.size(); ++i) {
    EXPECT_EQ(back[i].trace.trace_id, ledger[i].trace.trace_id);
    EXPECT_EQ(back[i].trace.spans, ledger[i].trace.spans);
    EXPECT_EQ(back[i].complete, ledger[i].complete);
    EXPECT_EQ(back[i].sampled_span_count, ledger[i].sampled_span_count);
    EXPECT_EQ(threshold_of(back[i].trace.shared), threshold_of(ledger[i].trace.shared));
  }
}

TEST(Ledger, RejectsForeignSpans) {
  std::stringstream buf;
  LedgerEntry e;
  e.trace = parent_child_trace();
  e.trace.trace_id = TraceId{1, 1};
  io::write_ledger(buf, std::vector<LedgerEntry>{e});
  EXPECT_THROW(io::read_ledger(buf), ParseError);
}
