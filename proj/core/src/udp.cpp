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

#include "codelsim/udp.hpp"

#include <stdexcept>
#include <utility>

namespace codelsim {

namespace {
using U128 = unsigned __int128;

// numerator of the exact rational period in nanoseconds: size * 8e9 / rate
U128 period_num(const UdpCbrConfig& c) {
  return static_cast<U128>(c.packet_size) * 8u * 1'000'000'000ull;
}
}  // namespace

void UdpCbrConfig::validate() const {
  if (rate_bps == 0) {
    throw std::invalid_argument("udp config: rate must be positive");
  }
  if (packet_size < 64 || packet_size > 9000) {
    throw std::invalid_argument("udp config: packet size outside [64, 9000]");
  }
  if (stop <= start) {
    throw std::invalid_argument("udp config: stop must be after start");
  }
}

std::uint64_t udp_emission_count(const UdpCbrConfig& config) {
  config.validate();
  const auto duration_ns = static_cast<U128>(to_ns(config.stop - config.start));
  return static_cast<std::uint64_t>(duration_ns * config.rate_bps /
                                    period_num(config));
}

SimTime udp_emission_time(const UdpCbrConfig& config, std::uint64_t index) {
  const U128 t = static_cast<U128>(index) * period_num(config) / config.rate_bps;
  return config.start + ns(static_cast<std::int64_t>(t));
}

std::optional<SimTime> udp_cbr_tick(const UdpCbrConfig& config, SimTime now) {
  const std::uint64_t total = udp_emission_count(config);
  if (total == 0) return std::nullopt;
  if (now < config.start) return udp_emission_time(config, 0);
  // smallest i with floor(i*num/rate) > delta, i.e. i >= ceil((delta+1)*rate/num)
  const auto delta = static_cast<U128>(to_ns(now - config.start));
  const U128 num = period_num(config);
  const U128 i = ((delta + 1) * config.rate_bps + num - 1) / num;
  if (i >= total) return std::nullopt;
  return udp_emission_time(config, static_cast<std::uint64_t>(i));
}

UdpCbrSource::UdpCbrSource(EventQueue& events, const UdpCbrConfig& config,
                           std::uint32_t flow_id, PacketIdGen& ids,
                           std::function<void(const Packet&)> emit)
    : events_(events),
      config_(config),
      flow_id_(flow_id),
      ids_(ids),
      emit_(std::move(emit)) {
  config_.validate();
  total_ = udp_emission_count(config_);
}

void UdpCbrSource::start() {
  if (total_ == 0) return;
  events_.schedule(udp_emission_time(config_, 0), [this] { tick(); });
}

void UdpCbrSource::tick() {
  Packet p;
  p.id = ids_.take();
  p.flow_id = flow_id_;
  p.size = config_.packet_size;
  p.kind = PacketKind::Data;
  p.seq = emitted_;
  p.created_at = events_.now();
  ++emitted_;
  emit_(p);
  if (emitted_ < total_) {
    events_.schedule(udp_emission_time(config_, emitted_), [this] { tick(); });
  }
}

}  // namespace codelsim
