// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "spansketch/simulator.hpp"
#include "spansketch/trace_model.hpp"

namespace spansketch::io {

/// Span records, one JSON object per line:
///
///   {"trace_id":"<32 hex>","span_id":"<16 hex>",
///    "link":{"kind":"root"|"parent"|"ancestor","ancestor_span_id":"<16 hex>","skipped":N},
///    "service":"...","op":"...","start_us":N,"dur_us":N,"error":bool,
///    "rate_exp":J | "rate":X, "attrs":{...}}
///
/// Hex is lowercase and fixed width. "skipped" is present iff kind is
/// "ancestor"; "ancestor_span_id" is absent for roots and for ancestor links
/// with no sampled ancestor. Exactly one of "rate_exp" and "rate" appears.
/// A header line {"v":1} and unknown keys are ignored.
std::string encode_span(const Span& span);
/// Throws Error describing the problem; callers add line context.
Span decode_span(std::string_view line);

void write_spans(std::ostream& out, std::span<const Span> spans);
/// Throws ParseError carrying the offending line number.
std::vector<Span> read_spans(std::istream& in);

/// Groups spans by trace id in order of first appearance.
/// Throws Error on a span id repeated within one trace.
std::vector<SampledTrace> reassemble(std::span<const Span> spans);

/// Ledger lines:
///   {"trace_id":"...","shared_index":I,"complete":bool,"sampled":N,"spans":[<span record>...]}
/// or "shared_random":R instead of "shared_index" for real-valued draws.
void write_ledger(std::ostream& out, std::span<const LedgerEntry> entries);
std::vector<LedgerEntry> read_ledger(std::istream& in);

} // namespace spansketch::io
