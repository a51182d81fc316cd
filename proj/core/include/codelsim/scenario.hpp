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
#include <optional>
#include <string>
#include <vector>

#include "codelsim/codel.hpp"
#include "codelsim/pipeline.hpp"
#include "codelsim/summary.hpp"
#include "codelsim/time.hpp"

// Experiment configuration and execution. Configs are line-oriented
// `key = value` text: durations take ns/us/ms/s suffixes, rates take
// bit/kbit/Mbit/Gbit (decimal), byte sizes take B/KB/MB/GB (decimal), and
// each `flow =` line appends one traffic source.
namespace codelsim {

enum class AqmVariant : std::uint8_t { ReferenceCodel, PipelineCodel, NoAqm };

enum class FlowKind : std::uint8_t { Tcp, UdpCbr };

struct FlowSpec {
  FlowKind kind{FlowKind::Tcp};
  std::uint64_t rate_bps{0};        // UdpCbr only
  std::uint32_t packet_size{1500};  // UdpCbr only; TCP is MSS 1460 + 40
  Duration link_latency{std::chrono::milliseconds{1}};  // one way
  SimTime start{};
  std::optional<SimTime> stop;  // UdpCbr only; defaults to the duration
};

struct ScenarioConfig {
  std::string name{"scenario"};
  AqmVariant variant{AqmVariant::ReferenceCodel};
  SqrtMode sqrt_mode{SqrtMode::Exact};
  std::optional<bool> if3_enabled;  // ReferenceCodel only; defaults to on
  AttachPoint attach{AttachPoint::Egress};
  OccupancyUnit occupancy_unit{OccupancyUnit::Bytes};
  std::uint32_t fq_queues{1};
  std::uint64_t drain_rate_bps{100'000'000};
  std::uint64_t buffer_bytes{1'000'000};
  Duration target{std::chrono::milliseconds{5}};
  Duration interval{std::chrono::milliseconds{100}};
  Duration duration{std::chrono::seconds{4}};
  std::uint64_t seed{1};
  std::vector<FlowSpec> flows;
  std::string csv_out;      // optional output path
  std::string summary_out;  // optional output path

  // Field-level checks; throws std::invalid_argument.
  void validate() const;
};

// Parses config text. Unknown keys, bad units, and structural problems
// throw std::invalid_argument naming the line; the result is validated.
ScenarioConfig parse_scenario(const std::string& text);
ScenarioConfig load_scenario(const std::string& path);  // adds file errors

struct ScenarioResult {
  RunSummary summary;
  std::vector<CsvRow> rows;  // one per packet, ingress order
};

// Deterministic execution: identical config (including seed) gives
// byte-identical rows. The seed only jitters TCP flow start times within
// 5 ms; UDP schedules are taken literally from the config.
ScenarioResult run_scenario(const ScenarioConfig& config);

struct SweepPoint {
  std::uint64_t rate_bps{0};
  double mean_latency_ms{0.0};  // over delivered packets
  double loss_pct{0.0};         // aqm drops / sent
  std::uint64_t delivered{0};
};

// One run per rate with every UDP flow retargeted to that rate. The config
// must contain UDP flows only.
std::vector<SweepPoint> rate_sweep(const ScenarioConfig& config,
                                   const std::vector<std::uint64_t>& rates_bps);

inline constexpr std::string_view kSweepCsvHeader =
    "rate_bps,mean_latency_ms,loss_pct,delivered";

std::string format_sweep(const std::vector<SweepPoint>& points);

// Unit-suffixed scalar parsers shared by config files and CLI flags.
Duration parse_duration(const std::string& text);     // 10ns 5us 3ms 2s
std::uint64_t parse_rate(const std::string& text);    // 100Mbit, 1Gbit
std::uint64_t parse_bytes(const std::string& text);   // 64B 10KB 1MB

}  // namespace codelsim
