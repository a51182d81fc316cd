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

#include "codelsim/simnet.hpp"

#include <stdexcept>
#include <string>
#include <utility>

namespace codelsim {

namespace {
constexpr std::uint32_t kMinPacketBytes = 64;
constexpr std::uint32_t kMaxPacketBytes = 9000;
}  // namespace

Duration transmission_time(std::uint32_t size_bytes, std::uint64_t rate_bps) {
  if (rate_bps == 0) {
    throw std::invalid_argument("transmission_time: rate must be positive");
  }
  // bits * 1e9 stays below 2^63 for any valid packet size
  const std::uint64_t bits = static_cast<std::uint64_t>(size_bytes) * 8u;
  return ns(static_cast<std::int64_t>(bits * 1'000'000'000ull / rate_bps));
}

EnqueueResult TrafficManagerQueue::enqueue(const Packet& p, SimTime now) {
  if (p.size < kMinPacketBytes || p.size > kMaxPacketBytes) {
    throw std::invalid_argument("traffic manager: packet size " +
                                std::to_string(p.size) +
                                " outside [64, 9000] bytes");
  }
  ++arrivals_;
  if (occupancy_bytes_ + p.size > capacity_bytes_) {
    ++tail_drops_;
    return EnqueueResult::TailDropped;
  }
  occupancy_bytes_ += p.size;
  items_.push_back(Item{p, now});
  return EnqueueResult::Enqueued;
}

TrafficManagerQueue::Dequeued TrafficManagerQueue::dequeue(SimTime now) {
  if (items_.empty()) {
    throw std::logic_error("traffic manager: dequeue from empty queue");
  }
  Item item = std::move(items_.front());
  items_.pop_front();
  occupancy_bytes_ -= item.packet.size;
  return Dequeued{item.packet, now - item.enqueued_at};
}

void Stamper::record_in(const Packet& p, SimTime now) {
  if (index_.count(p.id) != 0) {
    throw std::logic_error("stamper: duplicate ingress record for packet " +
                           std::to_string(p.id));
  }
  index_.emplace(p.id, records_.size());
  StampRecord r;
  r.packet_id = p.id;
  r.flow_id = p.flow_id;
  r.size = p.size;
  r.in = now;
  records_.push_back(r);
}

StampRecord& Stamper::find(std::uint64_t id) {
  auto it = index_.find(id);
  if (it == index_.end()) {
    throw std::logic_error("stamper: packet " + std::to_string(id) +
                           " has no ingress record");
  }
  return records_[it->second];
}

void Stamper::record_out(std::uint64_t id, SimTime now) {
  StampRecord& r = find(id);
  if (r.out || r.lost_at) {
    throw std::logic_error("stamper: packet " + std::to_string(id) +
                           " already terminated");
  }
  if (now < r.in) {
    throw std::logic_error("stamper: egress before ingress for packet " +
                           std::to_string(id));
  }
  r.out = now;
  r.verdict = PacketVerdict::Forwarded;
}

void Stamper::record_loss(std::uint64_t id, PacketVerdict verdict, SimTime now) {
  if (verdict == PacketVerdict::Forwarded) {
    throw std::logic_error("stamper: a loss verdict is required");
  }
  StampRecord& r = find(id);
  if (r.out || r.lost_at) {
    throw std::logic_error("stamper: packet " + std::to_string(id) +
                           " already terminated");
  }
  r.lost_at = now;
  r.verdict = verdict;
  ++losses_;
}

ReferenceCodelAqm::ReferenceCodelAqm(const CodelConfig& config,
                                     std::uint32_t queues)
    : config_(config) {
  if (queues == 0) {
    throw std::invalid_argument("codel aqm: queue count must be positive");
  }
  states_.assign(queues, codel_init(config_));
}

Verdict ReferenceCodelAqm::decide(std::uint32_t queue, Duration delay,
                                  std::uint64_t occupancy, SimTime now) {
  CodelState& st = states_.at(queue);
  Decision d = codel_decide(st, PacketObservation{delay, occupancy, now}, config_);
  st = d.state;
  return d.verdict;
}

PipelineCodelAqm::PipelineCodelAqm(const CodelConfig& config,
                                   std::uint32_t queues)
    : program_(codel_pipeline_program(config, CodelPipelineOptions{queues, AttachPoint::Egress})),
      unit_(config.occupancy_unit) {
  m_delay_ = program_.meta.id(kMetaQueueDelay);
  m_occ_ = program_.meta.id(kMetaOccupancy);
  m_now_ = program_.meta.id(kMetaNow);
  m_qid_ = program_.meta.id(kMetaQueueId);
}

Verdict PipelineCodelAqm::decide(std::uint32_t queue, Duration delay,
                                 std::uint64_t occupancy, SimTime now) {
  auto meta = program_.make_meta();
  meta[m_delay_] = static_cast<alu::Value>(to_ns(delay));
  meta[m_occ_] = occupancy;
  meta[m_now_] = static_cast<alu::Value>(to_ns(now));
  meta[m_qid_] = queue;
  return run_pipeline(program_, std::move(meta)).verdict;
}

Dut::Dut(const DutConfig& config, EventQueue& events, Stamper& stamper,
         std::unique_ptr<Aqm> aqm)
    : config_(config), events_(events), stamper_(stamper), aqm_(std::move(aqm)) {
  if (config_.fq_queues == 0) {
    throw std::invalid_argument("dut: fq_queues must be positive");
  }
  if (config_.drain_rate_bps == 0) {
    throw std::invalid_argument("dut: drain rate must be positive");
  }
  if (config_.capacity_bytes < kMaxPacketBytes) {
    throw std::invalid_argument("dut: buffer must hold at least one packet");
  }
  if (!aqm_) aqm_ = std::make_unique<NoAqm>();
  queues_.assign(config_.fq_queues, TrafficManagerQueue(config_.capacity_bytes));
  arrivals_.assign(config_.fq_queues, 0);
  aqm_dropped_.assign(config_.fq_queues, 0);
  delivered_.assign(config_.fq_queues, 0);
  sampled_delay_.assign(config_.fq_queues, Duration{});
  sampled_occupancy_.assign(config_.fq_queues, 0);
}

std::uint32_t Dut::flow_queue(std::uint32_t flow_id, std::uint32_t queues) {
  // multiplicative hash; flows 0 and 1 land on distinct queues for small k
  const std::uint64_t mixed =
      (static_cast<std::uint64_t>(flow_id) * 0x9E3779B97F4A7C15ull) >> 32;
  return static_cast<std::uint32_t>(mixed % queues);
}

std::uint64_t Dut::occupancy_for(const TrafficManagerQueue& q) const {
  return aqm_->occupancy_unit() == OccupancyUnit::Bytes ? q.occupancy_bytes()
                                                        : q.occupancy_packets();
}

void Dut::arrive(const Packet& p) {
  const SimTime now = events_.now();
  stamper_.record_in(p, now);
  const std::uint32_t q = queue_of(p.flow_id);
  ++arrivals_[q];
  if (config_.attach == AttachPoint::Ingress) {
    // the ingress pipeline cannot know this packet's sojourn; it acts on
    // the queue state sampled at the most recent dequeue
    if (aqm_->decide(q, sampled_delay_[q], sampled_occupancy_[q], now) ==
        Verdict::Drop) {
      ++aqm_dropped_[q];
      stamper_.record_loss(p.id, PacketVerdict::AqmDropped, now);
      return;
    }
  }
  if (queues_[q].enqueue(p, now) == EnqueueResult::TailDropped) {
    stamper_.record_loss(p.id, PacketVerdict::TailDropped, now);
    return;
  }
  if (!busy_) start_service();
}

std::optional<std::uint32_t> Dut::pick_queue() const {
  for (std::uint32_t i = 0; i < config_.fq_queues; ++i) {
    const std::uint32_t q = (cursor_ + i) % config_.fq_queues;
    if (!queues_[q].empty()) return q;
  }
  return std::nullopt;
}

void Dut::start_service() {
  const auto picked = pick_queue();
  if (!picked) {
    busy_ = false;
    delivering_.reset();
    return;
  }
  const std::uint32_t q = *picked;
  const SimTime now = events_.now();
  auto [pkt, sojourn] = queues_[q].dequeue(now);
  cursor_ = (q + 1) % config_.fq_queues;
  sampled_delay_[q] = sojourn;
  sampled_occupancy_[q] = occupancy_for(queues_[q]);

  Verdict verdict = Verdict::Forward;
  if (config_.attach == AttachPoint::Egress) {
    verdict = aqm_->decide(q, sojourn, occupancy_for(queues_[q]), now);
  }

  busy_ = true;
  const Duration tx = transmission_time(pkt.size, config_.drain_rate_bps);
  if (verdict == Verdict::Drop) {
    // the slot is already committed; the packet just never hits the wire
    ++aqm_dropped_[q];
    stamper_.record_loss(pkt.id, PacketVerdict::AqmDropped, now);
    delivering_.reset();
    events_.schedule(now + tx, [this] { start_service(); });
    return;
  }
  delivering_ = q;
  events_.schedule(now + tx, [this, pkt, q] {
    const SimTime done = events_.now();
    stamper_.record_out(pkt.id, done);
    ++delivered_[q];
    delivering_.reset();
    if (deliver_) deliver_(pkt, done);
    start_service();
  });
}

QueueStats Dut::stats(std::uint32_t queue) const {
  const TrafficManagerQueue& q = queues_.at(queue);
  QueueStats s;
  s.arrivals = arrivals_[queue];
  s.tail_dropped = q.tail_drops();
  s.aqm_dropped = aqm_dropped_[queue];
  s.delivered = delivered_[queue];
  s.queued_packets = q.occupancy_packets();
  s.queued_bytes = q.occupancy_bytes();
  s.in_flight = (delivering_ && *delivering_ == queue) ? 1 : 0;
  return s;
}

QueueStats Dut::totals() const {
  QueueStats t;
  for (std::uint32_t q = 0; q < config_.fq_queues; ++q) {
    const QueueStats s = stats(q);
    t.arrivals += s.arrivals;
    t.tail_dropped += s.tail_dropped;
    t.aqm_dropped += s.aqm_dropped;
    t.delivered += s.delivered;
    t.queued_packets += s.queued_packets;
    t.queued_bytes += s.queued_bytes;
    t.in_flight += s.in_flight;
  }
  return t;
}

}  // namespace codelsim
