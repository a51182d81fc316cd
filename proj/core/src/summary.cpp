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

#include "codelsim/summary.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <stdexcept>

namespace codelsim {

std::string_view to_string(RowVerdict v) {
  switch (v) {
    case RowVerdict::Forward: return "forward";
    case RowVerdict::AqmDrop: return "aqm_drop";
    case RowVerdict::TailDrop: return "tail_drop";
    case RowVerdict::Pending: return "pending";
  }
  return "pending";
}

RowVerdict row_verdict_from(std::string_view s) {
  if (s == "forward") return RowVerdict::Forward;
  if (s == "aqm_drop") return RowVerdict::AqmDrop;
  if (s == "tail_drop") return RowVerdict::TailDrop;
  if (s == "pending") return RowVerdict::Pending;
  throw std::invalid_argument("csv: unknown verdict '" + std::string(s) + "'");
}

std::vector<CsvRow> rows_from_records(const std::vector<StampRecord>& records) {
  std::vector<CsvRow> rows;
  rows.reserve(records.size());
  for (const StampRecord& r : records) {
    CsvRow row;
    row.packet_id = r.packet_id;
    row.flow_id = r.flow_id;
    row.size_bytes = r.size;
    if (r.out) {
      row.verdict = RowVerdict::Forward;
      row.time_ns = to_ns(*r.out);
      row.latency_ns = to_ns(*r.out - r.in);
    } else if (r.lost_at) {
      row.verdict = r.verdict == PacketVerdict::TailDropped ? RowVerdict::TailDrop
                                                            : RowVerdict::AqmDrop;
      row.time_ns = to_ns(*r.lost_at);
    } else {
      row.verdict = RowVerdict::Pending;  // still inside the device at cutoff
      row.time_ns = to_ns(r.in);
    }
    rows.push_back(row);
  }
  return rows;
}

namespace {

LatencyStats stats_from(std::vector<std::int64_t> latencies_ns) {
  std::sort(latencies_ns.begin(), latencies_ns.end());
  const std::size_t n = latencies_ns.size();
  long double sum = 0.0L;
  for (const std::int64_t v : latencies_ns) sum += static_cast<long double>(v);
  const auto rank = [n](double p) {
    const auto idx = static_cast<std::size_t>(std::ceil(p * static_cast<double>(n)));
    return idx == 0 ? std::size_t{0} : idx - 1;  // nearest rank, 0-based
  };
  LatencyStats st;
  st.mean_ms = static_cast<double>(sum / static_cast<long double>(n)) / 1e6;
  st.median_ms = static_cast<double>(latencies_ns[rank(0.5)]) / 1e6;
  st.p95_ms = static_cast<double>(latencies_ns[rank(0.95)]) / 1e6;
  st.max_ms = static_cast<double>(latencies_ns.back()) / 1e6;
  return st;
}

struct FlowAccum {
  std::uint64_t sent{0}, delivered{0}, aqm{0}, tail{0}, delivered_bytes{0};
  std::vector<std::int64_t> latencies;
};

FlowSummary finish(std::uint32_t flow_id, const FlowAccum& a, double span_s) {
  FlowSummary f;
  f.flow_id = flow_id;
  f.sent = a.sent;
  f.delivered = a.delivered;
  f.aqm_dropped = a.aqm;
  f.tail_dropped = a.tail;
  f.loss_pct = a.sent == 0 ? 0.0
                           : 100.0 * static_cast<double>(a.aqm) /
                                 static_cast<double>(a.sent);
  f.goodput_mbit = span_s <= 0.0
                       ? 0.0
                       : static_cast<double>(a.delivered_bytes) * 8.0 /
                             span_s / 1e6;
  if (!a.latencies.empty()) f.latency = stats_from(a.latencies);
  return f;
}

}  // namespace

RunSummary summarize_rows(const std::vector<CsvRow>& rows) {
  std::map<std::uint32_t, FlowAccum> per_flow;
  FlowAccum all;
  std::int64_t t_min = std::numeric_limits<std::int64_t>::max();
  std::int64_t t_max = std::numeric_limits<std::int64_t>::min();
  for (const CsvRow& r : rows) {
    t_min = std::min(t_min, r.time_ns);
    t_max = std::max(t_max, r.time_ns);
    for (FlowAccum* a : {&per_flow[r.flow_id], &all}) {
      ++a->sent;
      switch (r.verdict) {
        case RowVerdict::Forward:
          ++a->delivered;
          a->delivered_bytes += r.size_bytes;
          if (r.latency_ns) a->latencies.push_back(*r.latency_ns);
          break;
        case RowVerdict::AqmDrop: ++a->aqm; break;
        case RowVerdict::TailDrop: ++a->tail; break;
        case RowVerdict::Pending: break;
      }
    }
  }
  const double span_s =
      rows.empty() ? 0.0 : static_cast<double>(t_max - t_min) / 1e9;
  RunSummary s;
  for (const auto& [flow_id, acc] : per_flow) {
    s.flows.push_back(finish(flow_id, acc, span_s));
  }
  s.aggregate = finish(0, all, span_s);
  return s;
}

void write_csv(std::ostream& out, const std::vector<CsvRow>& rows) {
  out << kCsvHeader << "\n";
  for (const CsvRow& r : rows) {
    out << r.time_ns << ',' << r.packet_id << ',' << r.flow_id << ',';
    if (r.latency_ns) out << *r.latency_ns;
    out << ',' << to_string(r.verdict) << ',' << r.size_bytes << "\n";
  }
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t begin = 0;
  while (true) {
    const std::size_t comma = line.find(',', begin);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(begin));
      return fields;
    }
    fields.push_back(line.substr(begin, comma - begin));
    begin = comma + 1;
  }
}

std::int64_t to_i64(const std::string& s, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("csv: line " + std::to_string(line_no) +
                                ": bad integer '" + s + "'");
  }
}

}  // namespace

std::vector<CsvRow> parse_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    throw std::invalid_argument("csv: empty input");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCsvHeader) {
    throw std::invalid_argument("csv: unexpected header '" + line + "'");
  }
  std::vector<CsvRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> f = split_fields(line);
    if (f.size() != 6) {
      throw std::invalid_argument("csv: line " + std::to_string(line_no) +
                                  ": expected 6 fields, got " +
                                  std::to_string(f.size()));
    }
    CsvRow r;
    r.time_ns = to_i64(f[0], line_no);
    r.packet_id = static_cast<std::uint64_t>(to_i64(f[1], line_no));
    r.flow_id = static_cast<std::uint32_t>(to_i64(f[2], line_no));
    if (!f[3].empty()) r.latency_ns = to_i64(f[3], line_no);
    r.verdict = row_verdict_from(f[4]);
    if (r.verdict == RowVerdict::Forward && !r.latency_ns) {
      throw std::invalid_argument("csv: line " + std::to_string(line_no) +
                                  ": delivered row without latency");
    }
    if (r.verdict != RowVerdict::Forward && r.latency_ns) {
      throw std::invalid_argument("csv: line " + std::to_string(line_no) +
                                  ": latency on an undelivered row");
    }
    r.size_bytes = static_cast<std::uint32_t>(to_i64(f[5], line_no));
    rows.push_back(r);
  }
  return rows;
}

namespace {

void append_flow(std::string& out, const char* label, const FlowSummary& f) {
  char buf[320];
  std::snprintf(buf, sizeof buf,
                "%s: sent=%llu delivered=%llu aqm_dropped=%llu "
                "tail_dropped=%llu loss_pct=%.3f goodput_mbit=%.3f",
                label, static_cast<unsigned long long>(f.sent),
                static_cast<unsigned long long>(f.delivered),
                static_cast<unsigned long long>(f.aqm_dropped),
                static_cast<unsigned long long>(f.tail_dropped), f.loss_pct,
                f.goodput_mbit);
  out += buf;
  if (f.latency) {
    std::snprintf(buf, sizeof buf,
                  " mean_ms=%.3f median_ms=%.3f p95_ms=%.3f max_ms=%.3f",
                  f.latency->mean_ms, f.latency->median_ms, f.latency->p95_ms,
                  f.latency->max_ms);
    out += buf;
  } else {
    out += " mean_ms=na median_ms=na p95_ms=na max_ms=na";
  }
  out += '\n';
}

}  // namespace

std::string format_summary(const RunSummary& summary) {
  std::string out;
  char label[48];
  for (const FlowSummary& f : summary.flows) {
    std::snprintf(label, sizeof label, "flow %u", f.flow_id);
    append_flow(out, label, f);
  }
  append_flow(out, "aggregate", summary.aggregate);
  return out;
}

}  // namespace codelsim
