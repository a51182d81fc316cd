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

#include <array>
#include <cstdint>

#include "codelsim/time.hpp"

namespace codelsim {

enum class Verdict { Forward, Drop };

// How interval/sqrt(count) is evaluated: full-precision arithmetic rounded
// to nanoseconds, or the NPU-style exact 16-entry lookup table plus a
// leading-zero power-of-two approximation for larger counts.
enum class SqrtMode { Exact, LutLz };

// Unit of the queue-occupancy input. Packet-count mode mirrors hardware
// whose queue depth is only visible as a number of enqueued packets.
enum class OccupancyUnit { Bytes, Packets };

// Static CoDel parameters. The defaults are the classic 5 ms target /
// 100 ms interval operating point.
struct CodelConfig {
  Duration target{std::chrono::milliseconds{5}};
  Duration interval{std::chrono::milliseconds{100}};
  std::uint32_t iface_mtu{1500};
  SqrtMode sqrt_mode{SqrtMode::Exact};
  OccupancyUnit occupancy_unit{OccupancyUnit::Bytes};
  bool if3_enabled{true};

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
};

// The four stateful variables of the drop state machine. One instance must
// be driven by a single packet sequence with non-decreasing `now`.
struct CodelState {
  bool dropping{false};
  std::uint32_t count{0};
  std::uint32_t last_count{0};
  SimTime drp_next{};

  bool operator==(const CodelState&) const = default;
};

// Per-packet input to the decision.
struct PacketObservation {
  Duration queue_delay{};           // sojourn time seen by this packet
  std::uint64_t queue_occupancy{};  // bytes, or packets in packet-count mode
  SimTime now{};
};

struct Decision {
  Verdict verdict;
  CodelState state;
};

// Validates the config and returns the all-zero initial state.
CodelState codel_init(const CodelConfig& config);

// One step of the CoDel state machine. Exactly one of four transitions
// applies, in this order:
//   - no violation (delay below target, or the queue holds less than one
//     MTU): forward and leave the dropping state;
//   - first violating packet while not dropping: forward (never drop the
//     packet that flips the state), enter dropping, seed count either from
//     the previous episode (count - last_count, when the episode ended
//     recently and if3 is enabled) or at 1, and arm drp_next;
//   - dropping and drp_next has passed: drop, bump count, re-arm drp_next
//     at now + interval/sqrt(count);
//   - otherwise: forward, state untouched.
Decision codel_decide(const CodelState& state, const PacketObservation& obs,
                      const CodelConfig& config);

// interval / sqrt(count) in the configured SqrtMode. count must be >= 1.
Duration control_law(std::uint32_t count, const CodelConfig& config);

// Full-precision interval/sqrt(count), rounded to nanoseconds.
Duration sqrt_interval_exact(std::uint32_t count, Duration interval);

// NPU realization: exact values for count 1..16; above that, divide the
// interval by 2^floor(k/2) where k is the index of the most significant
// set bit of count, times 181/256 when k is odd. Stays within a factor
// sqrt(2) of the exact value and is monotone non-increasing in count.
Duration sqrt_interval_lut_lz(std::uint32_t count, Duration interval);

// Control-law evaluator with the 16-entry table precomputed for a fixed
// interval, for per-packet use.
class ControlLaw {
 public:
  ControlLaw() = default;
  ControlLaw(Duration interval, SqrtMode mode);

  Duration operator()(std::uint32_t count) const;

  Duration interval() const { return interval_; }
  SqrtMode mode() const { return mode_; }

 private:
  std::array<Duration, 16> lut_{};  // interval/sqrt(c) for c = 1..16
  Duration interval_{std::chrono::milliseconds{100}};
  SqrtMode mode_{SqrtMode::Exact};
};

}  // namespace codelsim
