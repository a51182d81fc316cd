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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "codelsim/codel.hpp"

// An executable model of a feed-forward match-action pipeline. Packets
// carry a flat metadata record through an ordered list of stages; each
// stage may hold at most one stateful ALU op whose registers live in that
// stage only, so every read-modify-write is atomic within its stage and
// information never flows backwards.
namespace codelsim {

// Where the program observes the queue: egress sees the sojourn of the
// packet being dequeued; ingress sees an asynchronously sampled queue
// delay at enqueue time.
enum class AttachPoint { Egress, Ingress };

namespace alu {

using Value = std::uint64_t;

enum class SlotKind : std::uint8_t { Const, Meta, Reg, Tmp };

// Operand reference. Reg indices are positions in the owning op's register
// list, not stage-global ids, so bodies are relocatable.
struct Slot {
  SlotKind kind{SlotKind::Tmp};
  std::uint16_t index{0};
};

enum class BinOp : std::uint8_t { Add, Sub, Lt, Le, Gt, Ge, Eq, Ne, And, Or };

// Update functions are data: a short straight-line sequence over a closed
// instruction set (compare/arithmetic, select, predicated write, control
// law lookup). Later instructions observe earlier writes.
struct Instr {
  enum class Kind : std::uint8_t { Bin, Not, Copy, Select, GuardedCopy, ControlLawCall };
  Kind kind{Kind::Copy};
  BinOp op{BinOp::Add};  // Bin only
  Slot dst;              // Tmp or Reg
  Slot a;                // Bin/Not/Copy/Select/GuardedCopy predicate/ControlLawCall count
  Slot b;                // Bin rhs / Select true-arm / GuardedCopy source
  Slot c;                // Select false-arm
};

struct OpBody {
  std::vector<Instr> instrs;
  std::vector<Value> consts;
  Slot output{};  // value published as the op's result
  std::uint16_t tmp_count{0};
};

// Convenience builder producing fresh temporaries for expression results.
class BodyBuilder {
 public:
  Slot c(Value v);
  Slot in(std::uint16_t meta_id);
  Slot reg(std::uint16_t op_local_index);
  Slot bin(BinOp op, Slot a, Slot b);
  Slot not_of(Slot a);
  Slot select(Slot pred, Slot if_true, Slot if_false);
  Slot control_law(Slot count);
  void copy(Slot dst, Slot src);
  void guarded_copy(Slot pred, Slot dst, Slot src);
  void output(Slot s);
  OpBody take();

 private:
  Slot fresh();
  OpBody body_;
};

}  // namespace alu

using MetaId = std::uint16_t;

// Name table for metadata fields; a metadata record is a Value vector
// indexed by MetaId.
class MetaTable {
 public:
  MetaId id(std::string_view name);                       // find or add
  std::optional<MetaId> lookup(std::string_view) const;
  const std::string& name(MetaId id) const { return names_.at(id); }
  std::size_t size() const { return names_.size(); }

 private:
  std::vector<std::string> names_;
};

struct RegisterSpec {
  std::string name;
  unsigned width{32};           // bits; writes are masked to width
  std::uint32_t array_size{1};  // > 1 = addressable register array
};

// Stage-local register storage. Every register belongs to exactly one
// stage's file.
class RegisterFile {
 public:
  using Id = std::uint16_t;

  Id add(const RegisterSpec& spec);
  alu::Value read(Id id, std::uint32_t index) const;
  void write(Id id, std::uint32_t index, alu::Value v);
  void reset();
  const RegisterSpec& spec(Id id) const { return cells_.at(id).spec; }
  std::size_t size() const { return cells_.size(); }

 private:
  struct Cell {
    RegisterSpec spec;
    alu::Value mask;
    std::vector<alu::Value> values;
  };
  std::vector<Cell> cells_;
};

struct PipelineOp {
  std::string name;
  std::vector<RegisterFile::Id> registers;  // empty = stateless
  std::optional<MetaId> index_meta;         // array index source, fq mode
  std::optional<MetaId> output;             // metadata field receiving the result
  alu::OpBody body;

  bool stateful() const { return !registers.empty(); }
};

struct PipelineStage {
  std::vector<PipelineOp> ops;
  RegisterFile registers;
};

struct RunResult {
  Verdict verdict{Verdict::Forward};
  std::vector<alu::Value> meta;
};

// A validated program is safe to run: registers are stage-local, at most
// one stateful op per stage, and all slot references are in range.
class PipelineProgram {
 public:
  MetaTable meta;
  std::vector<PipelineStage> stages;
  MetaId verdict_meta{0};  // non-zero value = Drop
  AttachPoint attach_point{AttachPoint::Egress};
  ControlLaw law{};
  std::uint32_t alu_register_capacity{2};

  void validate() const;  // throws std::invalid_argument
  void reset();           // zero every register

  std::vector<alu::Value> make_meta() const;
};

// Runs one packet through all stages in order. Each stateful op applies
// its body atomically to its stage's registers.
RunResult run_pipeline(PipelineProgram& program, std::vector<alu::Value> meta);

// Clock-stepped execution with one packet per stage in flight: packet p
// occupies stage s at cycle p + s, so packet p's write to a stage register
// always precedes packet p+1's read of it. Results are identical to
// running packets one at a time.
std::vector<RunResult> run_pipeline_wave(
    PipelineProgram& program, const std::vector<std::vector<alu::Value>>& packets);

// Metadata field names used by the CoDel pipeline program.
inline constexpr std::string_view kMetaQueueDelay = "queue_delay_ns";
inline constexpr std::string_view kMetaOccupancy = "queue_occupancy";
inline constexpr std::string_view kMetaNow = "now_ns";
inline constexpr std::string_view kMetaQueueId = "queue_id";
inline constexpr std::string_view kMetaDelayViolation = "delay_violation";
inline constexpr std::string_view kMetaFirstViolation = "first_violation";
inline constexpr std::string_view kMetaCodelDrop = "codel_drop";
inline constexpr std::string_view kMetaDrop = "drop";

struct CodelPipelineOptions {
  std::uint32_t fq_queues{1};  // register array size; 1 = scalar registers
  AttachPoint attach{AttachPoint::Egress};
};

// The four-stage feed-forward CoDel rewrite:
//   stage 0  f_1        stateless delay-violation test
//   stage 1  s_alu1     {dropping}: detects the first violating packet
//   stage 2  s_alu2     {count, drp_next}: drop schedule and control law
//   stage 3  drop_gate  stateless final decision
// There is no equivalent of the reference's if_3 reseed: count restarts at
// one on every episode, and last_count has no register here.
PipelineProgram codel_pipeline_program(const CodelConfig& config,
                                       const CodelPipelineOptions& options);
PipelineProgram codel_pipeline_program(const CodelConfig& config);

}  // namespace codelsim
