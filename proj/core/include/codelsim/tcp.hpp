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
#include <limits>
#include <optional>
#include <set>
#include <unordered_map>

#include "codelsim/event_queue.hpp"
#include "codelsim/simnet.hpp"
#include "codelsim/time.hpp"

// Reno-style congestion control over an unlimited backlog. Sequence numbers
// count whole MSS-sized segments, the congestion window is a fractional
// number of MSS, and the receiver acknowledges every data packet with its
// next expected sequence. The acknowledgment path is lossless and bypasses
// the queue; only its one-way latency is modeled.
namespace codelsim {

enum class TcpPhase : std::uint8_t { SlowStart, CongestionAvoidance, Recovery };

enum class LossKind : std::uint8_t { TripleDupack, Timeout };

struct TcpFlowState {
  double cwnd{10.0};      // MSS units, fractional
  double ssthresh{std::numeric_limits<double>::infinity()};
  TcpPhase phase{TcpPhase::SlowStart};
  std::uint64_t in_flight{0};  // == next_seq - acked_high
  std::uint64_t next_seq{0};
  std::uint64_t acked_high{0};  // cumulative ack received so far
  std::uint32_t dupack_count{0};
  Duration rtt_estimate{};  // EWMA of ack-measured samples, reporting only
  std::uint32_t mss{1460};
  // stands in for the receive window: cwnd never grows past this
  double cwnd_cap{4096.0};
  std::uint64_t recover_point{0};  // Recovery ends once acked through here
};

struct TcpAckOutcome {
  TcpFlowState state;
  // the third duplicate ack: the caller must apply tcp_on_loss and
  // fast-retransmit state.acked_high
  bool triple_dupack{false};
  // partial ack inside Recovery: retransmit the next hole, state.acked_high
  bool retransmit{false};
};

// Cumulative-ack step. New acks shrink the flight and grow cwnd (SlowStart:
// +1 MSS per ack; CongestionAvoidance: +MSS/cwnd per ack); duplicate acks
// with data outstanding count toward fast retransmit. ack_seq beyond
// next_seq throws std::invalid_argument.
TcpAckOutcome tcp_on_ack(const TcpFlowState& state, std::uint64_t ack_seq,
                         SimTime now,
                         std::optional<Duration> rtt_sample = std::nullopt);

// Loss reaction: ssthresh := max(cwnd/2, 2). Triple dupack halves into
// Recovery; a timeout collapses to cwnd = 1 in SlowStart and rewinds
// next_seq for go-back-N resend.
TcpFlowState tcp_on_loss(const TcpFlowState& state, LossKind kind, SimTime now);

struct TcpConfig {
  std::uint32_t mss{1460};
  std::uint32_t header_bytes{40};  // wire size = mss + header = 1500
  double initial_cwnd{10.0};
  double cwnd_cap{4096.0};
  Duration rto{std::chrono::milliseconds{200}};  // fixed, no RTT adaptation
};

// Shared per-scenario packet id source; stamper ids must be unique even
// across retransmissions of one sequence number.
struct PacketIdGen {
  std::uint64_t next{0};
  std::uint64_t take() { return next++; }
};

// Ack-clocked sender. emit receives fully formed data packets at send time;
// the caller adds link latency and delivers them to the device under test.
class TcpSender {
 public:
  struct Counters {
    std::uint64_t sent{0};  // wire packets, including retransmissions
    std::uint64_t retransmits{0};
    std::uint64_t timeouts{0};
    std::uint64_t fast_recoveries{0};
  };

  TcpSender(EventQueue& events, const TcpConfig& config, std::uint32_t flow_id,
            PacketIdGen& ids, std::function<void(const Packet&)> emit);

  void start();  // sends the initial window at events.now()
  void on_ack(std::uint64_t ack_seq, SimTime now);

  const TcpFlowState& state() const { return state_; }
  const Counters& counters() const { return counters_; }
  std::uint32_t flow_id() const { return flow_id_; }

 private:
  void send_window();
  void transmit(std::uint64_t seq, bool retransmission);
  void arm_rto();

  EventQueue& events_;
  TcpConfig config_;
  std::uint32_t flow_id_;
  PacketIdGen& ids_;
  std::function<void(const Packet&)> emit_;
  TcpFlowState state_;
  struct SendInfo {
    SimTime at;
    bool retransmitted;
  };
  std::unordered_map<std::uint64_t, SendInfo> sent_info_;
  std::uint64_t rto_gen_{0};
  Counters counters_;
};

// In-order reassembly with a cumulative ack per delivered data packet.
class TcpReceiver {
 public:
  using AckSink = std::function<void(std::uint64_t ack_seq, SimTime now)>;

  explicit TcpReceiver(AckSink send_ack) : send_ack_(std::move(send_ack)) {}

  void on_data(const Packet& p, SimTime now);

  std::uint64_t next_expected() const { return next_expected_; }
  std::uint64_t received_total() const { return received_total_; }

 private:
  std::uint64_t next_expected_{0};
  std::uint64_t received_total_{0};
  std::set<std::uint64_t> out_of_order_;
  AckSink send_ack_;
};

}  // namespace codelsim
