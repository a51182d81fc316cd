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

#include "codelsim/tcp.hpp"

#include <algorithm>
#include <stdexcept>
#include <utility>

namespace codelsim {

TcpAckOutcome tcp_on_ack(const TcpFlowState& state, std::uint64_t ack_seq,
                         SimTime /*now*/, std::optional<Duration> rtt_sample) {
  if (ack_seq > state.next_seq) {
    throw std::invalid_argument("tcp: ack beyond sent data");
  }
  TcpAckOutcome out;
  TcpFlowState s = state;
  if (rtt_sample) {
    s.rtt_estimate = (s.rtt_estimate == Duration{})
                         ? *rtt_sample
                         : (s.rtt_estimate * 7 + *rtt_sample) / 8;
  }
  if (ack_seq > s.acked_high) {
    s.acked_high = ack_seq;
    s.in_flight = s.next_seq - s.acked_high;
    s.dupack_count = 0;
    if (s.phase == TcpPhase::Recovery) {
      if (ack_seq >= s.recover_point) {
        // full ack: the loss episode is repaired
        s.phase = TcpPhase::CongestionAvoidance;
        s.cwnd = s.ssthresh;
      } else {
        out.retransmit = true;  // partial ack exposes the next hole
      }
    } else if (s.phase == TcpPhase::SlowStart) {
      s.cwnd += 1.0;
      if (s.cwnd >= s.ssthresh) s.phase = TcpPhase::CongestionAvoidance;
    } else {
      s.cwnd += 1.0 / s.cwnd;
    }
    s.cwnd = std::min(s.cwnd, s.cwnd_cap);
  } else if (s.next_seq > s.acked_high) {
    // duplicate ack with data outstanding
    if (s.phase != TcpPhase::Recovery) {
      ++s.dupack_count;
      if (s.dupack_count == 3) out.triple_dupack = true;
    }
  }
  out.state = s;
  return out;
}

TcpFlowState tcp_on_loss(const TcpFlowState& state, LossKind kind,
                         SimTime /*now*/) {
  TcpFlowState s = state;
  s.ssthresh = std::max(s.cwnd / 2.0, 2.0);
  s.dupack_count = 0;
  if (kind == LossKind::TripleDupack) {
    s.cwnd = s.ssthresh;
    s.phase = TcpPhase::Recovery;
    s.recover_point = s.next_seq;
  } else {
    // timeout: restart from the cumulative ack, go-back-N
    s.cwnd = 1.0;
    s.phase = TcpPhase::SlowStart;
    s.next_seq = s.acked_high;
    s.in_flight = 0;
  }
  return s;
}

TcpSender::TcpSender(EventQueue& events, const TcpConfig& config,
                     std::uint32_t flow_id, PacketIdGen& ids,
                     std::function<void(const Packet&)> emit)
    : events_(events),
      config_(config),
      flow_id_(flow_id),
      ids_(ids),
      emit_(std::move(emit)) {
  if (config_.mss < 24 || config_.mss + config_.header_bytes > 9000) {
    throw std::invalid_argument("tcp config: mss out of range");
  }
  if (config_.initial_cwnd < 1.0) {
    throw std::invalid_argument("tcp config: initial cwnd must be >= 1 MSS");
  }
  if (config_.rto <= Duration{}) {
    throw std::invalid_argument("tcp config: rto must be positive");
  }
  state_.cwnd = config_.initial_cwnd;
  state_.cwnd_cap = config_.cwnd_cap;
  state_.mss = config_.mss;
}

void TcpSender::start() {
  send_window();
  arm_rto();
}

void TcpSender::on_ack(std::uint64_t ack_seq, SimTime now) {
  // a timeout rewinds next_seq; an ack in flight for pre-rewind data proves
  // delivery, so resume past it instead of resending
  if (ack_seq > state_.next_seq) {
    state_.next_seq = ack_seq;
    state_.in_flight = state_.next_seq - state_.acked_high;
  }
  std::optional<Duration> sample;
  if (ack_seq > state_.acked_high) {
    const auto it = sent_info_.find(ack_seq - 1);
    if (it != sent_info_.end() && !it->second.retransmitted) {
      sample = now - it->second.at;  // Karn: never sample a retransmission
    }
    for (std::uint64_t seq = state_.acked_high; seq < ack_seq; ++seq) {
      sent_info_.erase(seq);
    }
  }
  const bool advanced = ack_seq > state_.acked_high;

  TcpAckOutcome out = tcp_on_ack(state_, ack_seq, now, sample);
  state_ = out.state;
  if (out.triple_dupack) {
    state_ = tcp_on_loss(state_, LossKind::TripleDupack, now);
    ++counters_.fast_recoveries;
    transmit(state_.acked_high, true);
  } else if (out.retransmit) {
    transmit(state_.acked_high, true);
  }
  // partial acks deliberately do not refresh the timer: a dragging recovery
  // is cut short by the timeout instead of inching one hole per round trip
  if (advanced && state_.phase != TcpPhase::Recovery) arm_rto();
  send_window();
  if (state_.in_flight == 0) ++rto_gen_;  // nothing outstanding: disarm
}

void TcpSender::send_window() {
  while (static_cast<double>(state_.in_flight) < state_.cwnd) {
    transmit(state_.next_seq, false);
    ++state_.next_seq;
    ++state_.in_flight;
  }
}

void TcpSender::transmit(std::uint64_t seq, bool retransmission) {
  const SimTime now = events_.now();
  Packet p;
  p.id = ids_.take();
  p.flow_id = flow_id_;
  p.size = config_.mss + config_.header_bytes;
  p.kind = PacketKind::Data;
  p.seq = seq;
  p.created_at = now;
  sent_info_[seq] = SendInfo{now, retransmission};
  ++counters_.sent;
  if (retransmission) ++counters_.retransmits;
  emit_(p);
}

void TcpSender::arm_rto() {
  const std::uint64_t gen = ++rto_gen_;
  events_.schedule(events_.now() + config_.rto, [this, gen] {
    if (gen != rto_gen_) return;            // superseded or disarmed
    if (state_.in_flight == 0) return;      // nothing to recover
    state_ = tcp_on_loss(state_, LossKind::Timeout, events_.now());
    ++counters_.timeouts;
    arm_rto();
    send_window();
  });
}

void TcpReceiver::on_data(const Packet& p, SimTime now) {
  ++received_total_;
  if (p.seq == next_expected_) {
    ++next_expected_;
    auto it = out_of_order_.begin();
    while (it != out_of_order_.end() && *it == next_expected_) {
      ++next_expected_;
      it = out_of_order_.erase(it);
    }
  } else if (p.seq > next_expected_) {
    out_of_order_.insert(p.seq);
  }
  send_ack_(next_expected_, now);
}

}  // namespace codelsim
