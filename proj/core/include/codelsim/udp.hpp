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
#include <functional>
#include <optional>

#include "codelsim/event_queue.hpp"
#include "codelsim/simnet.hpp"
#include "codelsim/tcp.hpp"
#include "codelsim/time.hpp"

// Isochronous constant-bit-rate source without congestion control. The i-th
// packet leaves at start + floor(i * size * 8e9 / rate) ns: per-emission
// rounding of the exact rational period, so the schedule never drifts.
namespace codelsim {

struct UdpCbrConfig {
  std::uint64_t rate_bps{0};
  std::uint32_t packet_size{1500};  // bytes on the wire
  SimTime start{};
  SimTime stop{};

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
};

// Emissions over [start, stop): exactly floor(duration * rate / (8 * size)).
std::uint64_t udp_emission_count(const UdpCbrConfig& config);

// Departure time of emission `index` (0-based, must be < emission count).
SimTime udp_emission_time(const UdpCbrConfig& config, std::uint64_t index);

// First emission time strictly after `now`, or nullopt once the schedule is
// exhausted. `now` earlier than `start` yields the first emission.
std::optional<SimTime> udp_cbr_tick(const UdpCbrConfig& config, SimTime now);

class UdpCbrSource {
 public:
  UdpCbrSource(EventQueue& events, const UdpCbrConfig& config,
               std::uint32_t flow_id, PacketIdGen& ids,
               std::function<void(const Packet&)> emit);

  void start();  // schedules the first emission; later ones self-reschedule
  std::uint64_t emitted() const { return emitted_; }

 private:
  void tick();

  EventQueue& events_;
  UdpCbrConfig config_;
  std::uint32_t flow_id_;
  PacketIdGen& ids_;
  std::function<void(const Packet&)> emit_;
  std::uint64_t emitted_{0};
  std::uint64_t total_{0};
};

}  // namespace codelsim
