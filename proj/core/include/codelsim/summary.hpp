// Copyright 2026 The codelsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "codelsim/simnet.hpp"

// Measurement artifacts: one CSV row per packet that entered the device
// under test, and summaries computed from rows. The online summary and the
// one recomputed from an emitted CSV go through the same function, so
// re-summarizing is exact, not approximate.
namespace codelsim {

enum class RowVerdict : std::uint8_t { Forward, AqmDrop, TailDrop, Pending };

// One packet's fate. time_ns is the terminal event time (egress for
// delivered, drop time for losses) or the ingress time for packets still
// inside the device at cutoff. latency_ns is present only when delivered.
struct CsvRow {
  std::int64_t time_ns{0};
  std::uint64_t packet_id{0};
  std::uint32_t flow_id{0};
  std::optional<std::int64_t> latency_ns;
  RowVerdict verdict{RowVerdict::Pending};
  std::uint32_t size_bytes{0};
};

// Latency statistics over delivered packets, in milliseconds. Median and
// p95 use the nearest-rank convention on the sorted sample.
struct LatencyStats {
  double mean_ms{0.0};
  double median_ms{0.0};
  double p95_ms{0.0};
  double max_ms{0.0};
};

struct FlowSummary {
  std::uint32_t flow_id{0};
  std::uint64_t sent{0};  // packets that entered the device under test
  std::uint64_t delivered{0};
  std::uint64_t aqm_dropped{0};
  std::uint64_t tail_dropped{0};
  double loss_pct{0.0};  // aqm_dropped / sent, in percent
  double goodput_mbit{0.0};
  std::optional<LatencyStats> latency;  // absent when nothing was delivered
};

struct RunSummary {
  std::vector<FlowSummary> flows;  // ascending flow_id
  FlowSummary aggregate;           // flow_id unused
};

std::string_view to_string(RowVerdict v);
RowVerdict row_verdict_from(std::string_view s);  // throws std::invalid_argument

std::vector<CsvRow> rows_from_records(const std::vector<StampRecord>& records);

// Statistics over the given rows. Goodput counts delivered wire bytes over
// the observed event span (max time_ns - min time_ns across all rows).
RunSummary summarize_rows(const std::vector<CsvRow>& rows);

inline constexpr std::string_view kCsvHeader =
    "time_ns,packet_id,flow_id,latency_ns,verdict,size_bytes";

void write_csv(std::ostream& out, const std::vector<CsvRow>& rows);

// Strict reader for the format write_csv emits; malformed input throws
// std::invalid_argument naming the line.
std::vector<CsvRow> parse_csv(std::istream& in);

// Fixed-point presentation (three decimals); identical input yields
// byte-identical text.
std::string format_summary(const RunSummary& summary);

}  // namespace codelsim
