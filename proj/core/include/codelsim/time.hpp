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

#include <chrono>
#include <cstdint>

namespace codelsim {

// Simulation clock: 64-bit nanoseconds since the start of a run. Desk-scale
// runs last seconds, so wraparound is not handled.
struct SimClock {
  using rep = std::int64_t;
  using period = std::nano;
  using duration = std::chrono::duration<rep, period>;
  using time_point = std::chrono::time_point<SimClock, duration>;
  static constexpr bool is_steady = true;
};

using Duration = SimClock::duration;
using SimTime = SimClock::time_point;

inline constexpr SimTime sim_epoch{};

constexpr std::int64_t to_ns(Duration d) { return d.count(); }
constexpr std::int64_t to_ns(SimTime t) { return t.time_since_epoch().count(); }
constexpr Duration ns(std::int64_t v) { return Duration{v}; }
constexpr SimTime at_ns(std::int64_t v) { return SimTime{Duration{v}}; }

constexpr double to_ms(Duration d) { return static_cast<double>(d.count()) / 1e6; }

}  // namespace codelsim
