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
#include <queue>
#include <vector>

#include "codelsim/time.hpp"

namespace codelsim {

// Deterministic discrete-event scheduler. Events fire in non-decreasing
// time order; equal times dispatch in insertion order, so a run is a
// stable sort of its schedule calls and identical inputs replay
// identically.
class EventQueue {
 public:
  using Handler = std::function<void()>;

  SimTime now() const { return now_; }

  // at must not lie in the past (at >= now()).
  void schedule(SimTime at, Handler fn);
  void schedule_in(Duration delta, Handler fn) { schedule(now_ + delta, std::move(fn)); }

  // Dispatches every event with time <= t_end, advancing the clock to each
  // event's time and finally to t_end. Returns the number of dispatched
  // events. Handlers may schedule further events.
  std::size_t run_until(SimTime t_end);

  bool empty() const { return heap_.empty(); }
  std::size_t pending() const { return heap_.size(); }

 private:
  struct Event {
    SimTime at;
    std::uint64_t seq;
    Handler fn;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      if (a.at != b.at) return a.at > b.at;
      return a.seq > b.seq;
    }
  };
  std::priority_queue<Event, std::vector<Event>, Later> heap_;
  SimTime now_{sim_epoch};
  std::uint64_t next_seq_{0};
};

}  // namespace codelsim
