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
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <unordered_map>
#include <vector>

#include "codelsim/codel.hpp"
#include "codelsim/event_queue.hpp"
#include "codelsim/pipeline.hpp"
#include "codelsim/time.hpp"

// The measured topology: senders feed a stamper, the stamper feeds the
// device under test (a rate-limited FIFO or fq set with an optional AQM),
// and departing packets pass the stamper again. Latency is the stamped
// window: queueing wait plus one transmission time; access links live
// outside it.
namespace codelsim {

enum class PacketKind : std::uint8_t { Data, Ack };

struct Packet {
  std::uint64_t id{0};
  std::uint32_t flow_id{0};
  std::uint32_t size{0};  // bytes on the wire, 64..9000
  PacketKind kind{PacketKind::Data};
  std::uint64_t seq{0};
  SimTime created_at{};
};

// Wire time of one packet at a constant drain rate, truncated to whole
// nanoseconds (1500 B at 100 Mbit/s = 120 us exactly).
Duration transmission_time(std::uint32_t size_bytes, std::uint64_t rate_bps);

enum class EnqueueResult : std::uint8_t { Enqueued, TailDropped };

// FIFO with byte-capacity tail drop. Timing (drain rate, service events)
// belongs to the Dut; the queue only orders packets and accounts bytes.
class TrafficManagerQueue {
 public:
  explicit TrafficManagerQueue(std::uint64_t capacity_bytes)
      : capacity_bytes_(capacity_bytes) {}

  EnqueueResult enqueue(const Packet& p, SimTime now);

  struct Dequeued {
    Packet packet;
    Duration sojourn;  // dequeue time minus enqueue time, >= 0
  };
  Dequeued dequeue(SimTime now);  // throws std::logic_error when empty

  bool empty() const { return items_.empty(); }
  std::uint64_t occupancy_bytes() const { return occupancy_bytes_; }
  std::uint64_t occupancy_packets() const { return items_.size(); }
  std::uint64_t arrivals() const { return arrivals_; }
  std::uint64_t tail_drops() const { return tail_drops_; }

 private:
  struct Item {
    Packet packet;
    SimTime enqueued_at;
  };
  std::deque<Item> items_;
  std::uint64_t capacity_bytes_;
  std::uint64_t occupancy_bytes_{0};
  std::uint64_t arrivals_{0};
  std::uint64_t tail_drops_{0};
};

enum class PacketVerdict : std::uint8_t { Forwarded, AqmDropped, TailDropped };

struct StampRecord {
  std::uint64_t packet_id{0};
  std::uint32_t flow_id{0};
  std::uint32_t size{0};
  SimTime in{};
  std::optional<SimTime> out;      // present only for delivered packets
  std::optional<SimTime> lost_at;  // present only for dropped packets
  PacketVerdict verdict{PacketVerdict::Forwarded};
};

// Ingress/egress timestamping around the device under test. Every packet
// is recorded on the way in; it terminates either with an out timestamp
// or as a loss.
class Stamper {
 public:
  void record_in(const Packet& p, SimTime now);   // duplicate id rejected
  void record_out(std::uint64_t id, SimTime now); // requires a prior In
  void record_loss(std::uint64_t id, PacketVerdict verdict, SimTime now);

  const std::vector<StampRecord>& records() const { return records_; }
  std::uint64_t loss_count() const { return losses_; }

 private:
  StampRecord& find(std::uint64_t id);
  std::vector<StampRecord> records_;
  std::unordered_map<std::uint64_t, std::size_t> index_;
  std::uint64_t losses_{0};
};

// Per-packet drop decision attached to the queue. queue selects the CoDel
// state in fq mode; occupancy is in the unit the policy asks for.
class Aqm {
 public:
  virtual ~Aqm() = default;
  virtual Verdict decide(std::uint32_t queue, Duration delay,
                         std::uint64_t occupancy, SimTime now) = 0;
  virtual OccupancyUnit occupancy_unit() const { return OccupancyUnit::Bytes; }
};

class NoAqm final : public Aqm {
 public:
  Verdict decide(std::uint32_t, Duration, std::uint64_t, SimTime) override {
    return Verdict::Forward;
  }
};

// Listing-style sequential CoDel, one state per queue.
class ReferenceCodelAqm final : public Aqm {
 public:
  ReferenceCodelAqm(const CodelConfig& config, std::uint32_t queues);
  Verdict decide(std::uint32_t queue, Duration delay, std::uint64_t occupancy,
                 SimTime now) override;
  OccupancyUnit occupancy_unit() const override { return config_.occupancy_unit; }
  const CodelState& state(std::uint32_t queue) const { return states_.at(queue); }

 private:
  CodelConfig config_;
  std::vector<CodelState> states_;
};

// The four-stage pipeline program driven per packet; per-queue state lives
// in register arrays.
class PipelineCodelAqm final : public Aqm {
 public:
  PipelineCodelAqm(const CodelConfig& config, std::uint32_t queues);
  Verdict decide(std::uint32_t queue, Duration delay, std::uint64_t occupancy,
                 SimTime now) override;
  OccupancyUnit occupancy_unit() const override { return unit_; }

 private:
  PipelineProgram program_;
  OccupancyUnit unit_;
  MetaId m_delay_, m_occ_, m_now_, m_qid_;
};

struct DutConfig {
  std::uint64_t capacity_bytes{1'000'000};      // ~80 ms at 100 Mbit/s
  std::uint64_t drain_rate_bps{100'000'000};
  std::uint32_t fq_queues{1};                   // 1 = single-queue mode
  AttachPoint attach{AttachPoint::Egress};
};

struct QueueStats {
  std::uint64_t arrivals{0};
  std::uint64_t tail_dropped{0};
  std::uint64_t aqm_dropped{0};
  std::uint64_t delivered{0};
  std::uint64_t queued_packets{0};
  std::uint64_t queued_bytes{0};
  std::uint64_t in_flight{0};  // 0 or 1: the packet on the wire
};

// Rate-limited queueing engine with the AQM attached at egress (decision
// per dequeued packet, using its own sojourn) or at ingress (decision at
// arrival, using the queue delay sampled at the most recent dequeue, as a
// run-to-completion ingress pipeline would see it).
class Dut {
 public:
  using DeliverHandler = std::function<void(const Packet&, SimTime)>;

  Dut(const DutConfig& config, EventQueue& events, Stamper& stamper,
      std::unique_ptr<Aqm> aqm);

  // Hands a packet to the stamper and the queueing engine at events.now().
  void arrive(const Packet& p);

  void set_deliver_handler(DeliverHandler handler) { deliver_ = std::move(handler); }

  static std::uint32_t flow_queue(std::uint32_t flow_id, std::uint32_t queues);
  std::uint32_t queue_of(std::uint32_t flow_id) const {
    return flow_queue(flow_id, config_.fq_queues);
  }

  QueueStats stats(std::uint32_t queue) const;
  QueueStats totals() const;
  bool busy() const { return busy_; }

 private:
  void start_service();
  std::optional<std::uint32_t> pick_queue() const;  // round-robin from cursor
  std::uint64_t occupancy_for(const TrafficManagerQueue& q) const;

  DutConfig config_;
  EventQueue& events_;
  Stamper& stamper_;
  std::unique_ptr<Aqm> aqm_;
  DeliverHandler deliver_;
  std::vector<TrafficManagerQueue> queues_;
  std::vector<std::uint64_t> arrivals_, aqm_dropped_, delivered_;
  // ingress-attach feedback: per queue, refreshed at each dequeue
  std::vector<Duration> sampled_delay_;
  std::vector<std::uint64_t> sampled_occupancy_;
  std::uint32_t cursor_{0};
  std::optional<std::uint32_t> delivering_;  // queue of the packet on the wire
  bool busy_{false};
};

}  // namespace codelsim
