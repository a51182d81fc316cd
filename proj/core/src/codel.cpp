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

#include "codelsim/codel.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace codelsim {

namespace {

constexpr std::uint32_t kLutEntries = 16;

std::int64_t exact_ns(std::uint32_t count, std::int64_t interval_ns) {
  const long double v = static_cast<long double>(interval_ns) /
                        std::sqrt(static_cast<long double>(count));
  const std::int64_t rounded = llroundl(v);
  return rounded > 0 ? rounded : 1;  // never collapse to a zero drop spacing
}

std::int64_t lut_lz_ns(std::uint32_t count, std::int64_t interval_ns) {
  if (count <= kLutEntries) return exact_ns(count, interval_ns);
  // k = position of the most significant set bit; count >= 17 so k >= 4.
  const unsigned k = std::bit_width(count) - 1;
  std::uint64_t v = static_cast<std::uint64_t>(interval_ns) >> (k / 2);
  if (k & 1u) v = (v * 181u) >> 8;  // 181/256 ~ 1/sqrt(2)
  return v > 0 ? static_cast<std::int64_t>(v) : 1;
}

std::uint32_t saturating_increment(std::uint32_t v) {
  return v == std::numeric_limits<std::uint32_t>::max() ? v : v + 1;
}

}  // namespace

void CodelConfig::validate() const {
  if (target <= Duration::zero())
    throw std::invalid_argument("codel config: target must be positive");
  if (interval <= Duration::zero())
    throw std::invalid_argument("codel config: interval must be positive");
  if (interval <= target)
    throw std::invalid_argument("codel config: interval must exceed target");
  if (iface_mtu < 64)
    throw std::invalid_argument("codel config: iface_mtu must be >= 64 bytes");
}

CodelState codel_init(const CodelConfig& config) {
  config.validate();
  return CodelState{};
}

Duration sqrt_interval_exact(std::uint32_t count, Duration interval) {
  if (count == 0) throw std::invalid_argument("control law: count must be >= 1");
  return ns(exact_ns(count, to_ns(interval)));
}

Duration sqrt_interval_lut_lz(std::uint32_t count, Duration interval) {
  if (count == 0) throw std::invalid_argument("control law: count must be >= 1");
  return ns(lut_lz_ns(count, to_ns(interval)));
}

Duration control_law(std::uint32_t count, const CodelConfig& config) {
  return config.sqrt_mode == SqrtMode::Exact
             ? sqrt_interval_exact(count, config.interval)
             : sqrt_interval_lut_lz(count, config.interval);
}

ControlLaw::ControlLaw(Duration interval, SqrtMode mode)
    : interval_(interval), mode_(mode) {
  for (std::uint32_t c = 1; c <= kLutEntries; ++c)
    lut_[c - 1] = ns(exact_ns(c, to_ns(interval)));
}

Duration ControlLaw::operator()(std::uint32_t count) const {
  if (count == 0) throw std::invalid_argument("control law: count must be >= 1");
  if (count <= kLutEntries) {
    if (mode_ == SqrtMode::LutLz) return lut_[count - 1];
    return ns(exact_ns(count, to_ns(interval_)));
  }
  return mode_ == SqrtMode::LutLz ? ns(lut_lz_ns(count, to_ns(interval_)))
                                  : ns(exact_ns(count, to_ns(interval_)));
}

Decision codel_decide(const CodelState& state, const PacketObservation& obs,
                      const CodelConfig& config) {
  CodelState s = state;

  const bool below_target = obs.queue_delay < config.target;
  const bool queue_small = config.occupancy_unit == OccupancyUnit::Bytes
                               ? obs.queue_occupancy < config.iface_mtu
                               : obs.queue_occupancy < 1;
  // if_1: no target delay violation
  if (below_target || queue_small) {
    s.dropping = false;
    return {Verdict::Forward, s};
  }

  // if_2: first packet that violates the delay target
  if (!s.dropping) {
    s.dropping = true;
    const std::uint32_t tmp = s.count;
    const std::int64_t delta =
        static_cast<std::int64_t>(s.count) - static_cast<std::int64_t>(s.last_count);
    const Duration since_drop = obs.now - s.drp_next;  // signed; may be negative
    if (config.if3_enabled && delta > 1 && since_drop < 16 * config.interval) {
      // if_3: the last dropping episode ended recently, resume near its rate
      s.count = static_cast<std::uint32_t>(delta);
    } else {
      s.count = 1;
    }
    s.drp_next = obs.now + control_law(s.count, config);
    s.last_count = tmp;
    return {Verdict::Forward, s};
  }

  // if_4: in the dropping state and the scheduled drop time has passed
  if (s.drp_next <= obs.now) {
    s.count = saturating_increment(s.count);
    s.drp_next = obs.now + control_law(s.count, config);
    return {Verdict::Drop, s};
  }

  return {Verdict::Forward, s};
}

}  // namespace codelsim
