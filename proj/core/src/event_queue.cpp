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

#include "codelsim/event_queue.hpp"

#include <stdexcept>
#include <utility>

namespace codelsim {

void EventQueue::schedule(SimTime at, Handler fn) {
  if (at < now_) {
    throw std::invalid_argument("event queue: cannot schedule in the past");
  }
  heap_.push(Event{at, next_seq_++, std::move(fn)});
}

std::size_t EventQueue::run_until(SimTime t_end) {
  if (t_end < now_) {
    throw std::invalid_argument("event queue: cannot run backwards");
  }
  std::size_t dispatched = 0;
  while (!heap_.empty() && heap_.top().at <= t_end) {
    // top() is const; the event is removed before the handler runs so a
    // handler scheduling at the same instant lands behind its siblings.
    Event ev = std::move(const_cast<Event&>(heap_.top()));
    heap_.pop();
    now_ = ev.at;
    ev.fn();
    ++dispatched;
  }
  now_ = t_end;
  return dispatched;
}

}  // namespace codelsim
