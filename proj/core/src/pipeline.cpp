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

#include "codelsim/pipeline.hpp"

#include <algorithm>
#include <stdexcept>

namespace codelsim {

namespace alu {

Slot BodyBuilder::fresh() {
  return Slot{SlotKind::Tmp, body_.tmp_count++};
}

Slot BodyBuilder::c(Value v) {
  for (std::size_t i = 0; i < body_.consts.size(); ++i)
    if (body_.consts[i] == v) return Slot{SlotKind::Const, static_cast<std::uint16_t>(i)};
  body_.consts.push_back(v);
  return Slot{SlotKind::Const, static_cast<std::uint16_t>(body_.consts.size() - 1)};
}

Slot BodyBuilder::in(std::uint16_t meta_id) { return Slot{SlotKind::Meta, meta_id}; }

Slot BodyBuilder::reg(std::uint16_t op_local_index) {
  return Slot{SlotKind::Reg, op_local_index};
}

Slot BodyBuilder::bin(BinOp op, Slot a, Slot b) {
  const Slot dst = fresh();
  body_.instrs.push_back(Instr{Instr::Kind::Bin, op, dst, a, b, {}});
  return dst;
}

Slot BodyBuilder::not_of(Slot a) {
  const Slot dst = fresh();
  body_.instrs.push_back(Instr{Instr::Kind::Not, BinOp::Add, dst, a, {}, {}});
  return dst;
}

Slot BodyBuilder::select(Slot pred, Slot if_true, Slot if_false) {
  const Slot dst = fresh();
  body_.instrs.push_back(
      Instr{Instr::Kind::Select, BinOp::Add, dst, pred, if_true, if_false});
  return dst;
}

Slot BodyBuilder::control_law(Slot count) {
  const Slot dst = fresh();
  body_.instrs.push_back(Instr{Instr::Kind::ControlLawCall, BinOp::Add, dst, count, {}, {}});
  return dst;
}

void BodyBuilder::copy(Slot dst, Slot src) {
  body_.instrs.push_back(Instr{Instr::Kind::Copy, BinOp::Add, dst, src, {}, {}});
}

void BodyBuilder::guarded_copy(Slot pred, Slot dst, Slot src) {
  body_.instrs.push_back(Instr{Instr::Kind::GuardedCopy, BinOp::Add, dst, pred, src, {}});
}

void BodyBuilder::output(Slot s) { body_.output = s; }

OpBody BodyBuilder::take() { return std::move(body_); }

}  // namespace alu

MetaId MetaTable::id(std::string_view name) {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return static_cast<MetaId>(i);
  names_.emplace_back(name);
  return static_cast<MetaId>(names_.size() - 1);
}

std::optional<MetaId> MetaTable::lookup(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return static_cast<MetaId>(i);
  return std::nullopt;
}

RegisterFile::Id RegisterFile::add(const RegisterSpec& spec) {
  if (spec.width == 0 || spec.width > 64)
    throw std::invalid_argument("register " + spec.name + ": width must be 1..64");
  if (spec.array_size == 0)
    throw std::invalid_argument("register " + spec.name + ": array size must be >= 1");
  Cell cell;
  cell.spec = spec;
  cell.mask = spec.width == 64 ? ~alu::Value{0} : ((alu::Value{1} << spec.width) - 1);
  cell.values.assign(spec.array_size, 0);
  cells_.push_back(std::move(cell));
  return static_cast<Id>(cells_.size() - 1);
}

alu::Value RegisterFile::read(Id id, std::uint32_t index) const {
  return cells_.at(id).values.at(index);
}

void RegisterFile::write(Id id, std::uint32_t index, alu::Value v) {
  Cell& cell = cells_.at(id);
  cell.values.at(index) = v & cell.mask;
}

void RegisterFile::reset() {
  for (Cell& cell : cells_) std::fill(cell.values.begin(), cell.values.end(), 0);
}

namespace {

// One op execution: reads and writes go to the op's stage-local registers,
// all at the same array index, which makes the body an atomic
// read-modify-write on that register (row).
class OpContext {
 public:
  OpContext(const PipelineOp& op, PipelineStage& stage,
            std::vector<alu::Value>& meta, const ControlLaw& law)
      : op_(op), stage_(stage), meta_(meta), law_(law) {
    tmps_.assign(op.body.tmp_count, 0);
    if (op.index_meta) {
      index_ = static_cast<std::uint32_t>(meta_[*op.index_meta]);
    }
  }

  alu::Value load(alu::Slot s) const {
    switch (s.kind) {
      case alu::SlotKind::Const: return op_.body.consts.at(s.index);
      case alu::SlotKind::Meta: return meta_.at(s.index);
      case alu::SlotKind::Tmp: return tmps_.at(s.index);
      case alu::SlotKind::Reg: {
        const RegisterFile::Id id = op_.registers.at(s.index);
        return stage_.registers.read(id, row(id));
      }
    }
    return 0;
  }

  void store(alu::Slot s, alu::Value v) {
    switch (s.kind) {
      case alu::SlotKind::Tmp: tmps_.at(s.index) = v; return;
      case alu::SlotKind::Reg: {
        const RegisterFile::Id id = op_.registers.at(s.index);
        stage_.registers.write(id, row(id), v);
        return;
      }
      default: throw std::logic_error("alu store target must be Tmp or Reg");
    }
  }

  void run() {
    for (const alu::Instr& i : op_.body.instrs) exec(i);
    if (op_.output) meta_.at(*op_.output) = load(op_.body.output);
  }

 private:
  std::uint32_t row(RegisterFile::Id id) const {
    return stage_.registers.spec(id).array_size > 1 ? index_ : 0;
  }

  void exec(const alu::Instr& i) {
    using K = alu::Instr::Kind;
    switch (i.kind) {
      case K::Bin: {
        const alu::Value a = load(i.a);
        const alu::Value b = load(i.b);
        alu::Value r = 0;
        switch (i.op) {
          case alu::BinOp::Add: r = a + b; break;
          case alu::BinOp::Sub: r = a - b; break;
          case alu::BinOp::Lt: r = a < b; break;
          case alu::BinOp::Le: r = a <= b; break;
          case alu::BinOp::Gt: r = a > b; break;
          case alu::BinOp::Ge: r = a >= b; break;
          case alu::BinOp::Eq: r = a == b; break;
          case alu::BinOp::Ne: r = a != b; break;
          case alu::BinOp::And: r = (a != 0) && (b != 0); break;
          case alu::BinOp::Or: r = (a != 0) || (b != 0); break;
        }
        store(i.dst, r);
        return;
      }
      case K::Not: store(i.dst, load(i.a) == 0 ? 1 : 0); return;
      case K::Copy: store(i.dst, load(i.a)); return;
      case K::Select: store(i.dst, load(i.a) != 0 ? load(i.b) : load(i.c)); return;
      case K::GuardedCopy:
        if (load(i.a) != 0) store(i.dst, load(i.b));
        return;
      case K::ControlLawCall: {
        // count 0 is representable in a fresh register; the law is defined
        // from 1, so clamp. Validated programs only use the result behind
        // a guard that implies count >= 1.
        alu::Value count = load(i.a);
        if (count == 0) count = 1;
        if (count > UINT32_MAX) count = UINT32_MAX;
        store(i.dst, static_cast<alu::Value>(to_ns(law_(static_cast<std::uint32_t>(count)))));
        return;
      }
    }
  }

  const PipelineOp& op_;
  PipelineStage& stage_;
  std::vector<alu::Value>& meta_;
  const ControlLaw& law_;
  std::vector<alu::Value> tmps_;
  std::uint32_t index_{0};
};

void check_slot(const PipelineProgram& p, const PipelineOp& op, alu::Slot s,
                bool is_dst) {
  switch (s.kind) {
    case alu::SlotKind::Const:
      if (is_dst || s.index >= op.body.consts.size())
        throw std::invalid_argument("op " + op.name + ": bad const slot");
      return;
    case alu::SlotKind::Meta:
      if (is_dst || s.index >= p.meta.size())
        throw std::invalid_argument("op " + op.name + ": bad meta slot");
      return;
    case alu::SlotKind::Tmp:
      if (s.index >= op.body.tmp_count)
        throw std::invalid_argument("op " + op.name + ": bad tmp slot");
      return;
    case alu::SlotKind::Reg:
      if (s.index >= op.registers.size())
        throw std::invalid_argument("op " + op.name + ": bad register slot");
      return;
  }
}

void run_stage(PipelineStage& stage, PipelineProgram& program,
               std::vector<alu::Value>& meta) {
  for (const PipelineOp& op : stage.ops) {
    OpContext ctx(op, stage, meta, program.law);
    ctx.run();
  }
}

}  // namespace

void PipelineProgram::validate() const {
  if (verdict_meta >= meta.size())
    throw std::invalid_argument("pipeline: verdict field is not declared");
  for (std::size_t si = 0; si < stages.size(); ++si) {
    const PipelineStage& stage = stages[si];
    int stateful = 0;
    for (const PipelineOp& op : stage.ops) {
      if (op.stateful()) ++stateful;
      if (op.registers.size() > alu_register_capacity)
        throw std::invalid_argument("op " + op.name + ": touches " +
                                    std::to_string(op.registers.size()) +
                                    " registers, ALU capacity is " +
                                    std::to_string(alu_register_capacity));
      bool needs_index = false;
      for (RegisterFile::Id id : op.registers) {
        if (id >= stage.registers.size())
          throw std::invalid_argument("op " + op.name +
                                      ": register not in its own stage");
        if (stage.registers.spec(id).array_size > 1) needs_index = true;
      }
      if (needs_index && !op.index_meta)
        throw std::invalid_argument("op " + op.name +
                                    ": register array needs an index field");
      if (op.index_meta && *op.index_meta >= meta.size())
        throw std::invalid_argument("op " + op.name + ": bad index field");
      if (op.output && *op.output >= meta.size())
        throw std::invalid_argument("op " + op.name + ": bad output field");
      for (const alu::Instr& i : op.body.instrs) {
        check_slot(*this, op, i.dst, true);
        check_slot(*this, op, i.a, false);
        if (i.kind == alu::Instr::Kind::Bin || i.kind == alu::Instr::Kind::Select ||
            i.kind == alu::Instr::Kind::GuardedCopy)
          check_slot(*this, op, i.b, false);
        if (i.kind == alu::Instr::Kind::Select) check_slot(*this, op, i.c, false);
      }
      if (op.output) check_slot(*this, op, op.body.output, false);
    }
    if (stateful > 1)
      throw std::invalid_argument("stage " + std::to_string(si) +
                                  ": more than one stateful ALU op");
  }
}

void PipelineProgram::reset() {
  for (PipelineStage& s : stages) s.registers.reset();
}

std::vector<alu::Value> PipelineProgram::make_meta() const {
  return std::vector<alu::Value>(meta.size(), 0);
}

RunResult run_pipeline(PipelineProgram& program, std::vector<alu::Value> meta) {
  if (meta.size() != program.meta.size())
    throw std::invalid_argument("pipeline: metadata record has wrong arity");
  for (PipelineStage& stage : program.stages) run_stage(stage, program, meta);
  const Verdict v =
      meta.at(program.verdict_meta) != 0 ? Verdict::Drop : Verdict::Forward;
  return RunResult{v, std::move(meta)};
}

std::vector<RunResult> run_pipeline_wave(
    PipelineProgram& program, const std::vector<std::vector<alu::Value>>& packets) {
  const std::size_t n_stages = program.stages.size();
  const std::size_t n = packets.size();
  std::vector<RunResult> results(n);
  if (n == 0) return results;
  std::vector<std::vector<alu::Value>> meta(n);
  for (std::size_t p = 0; p < n; ++p) {
    if (packets[p].size() != program.meta.size())
      throw std::invalid_argument("pipeline: metadata record has wrong arity");
    meta[p] = packets[p];
  }
  // Cycle c advances the wavefront: packet p sits in stage c - p. Stages
  // are processed back to front; any order works because stage state is
  // disjoint and metadata is per-packet.
  const std::size_t last_cycle = n + n_stages - 2;
  for (std::size_t cycle = 0; cycle <= last_cycle; ++cycle) {
    const std::size_t s_hi = std::min(cycle, n_stages - 1);
    for (std::size_t s = s_hi + 1; s-- > 0;) {
      const std::size_t p = cycle - s;
      if (p >= n) continue;
      run_stage(program.stages[s], program, meta[p]);
      if (s == n_stages - 1) {
        const Verdict v = meta[p].at(program.verdict_meta) != 0 ? Verdict::Drop
                                                                : Verdict::Forward;
        results[p] = RunResult{v, std::move(meta[p])};
      }
    }
  }
  return results;
}

PipelineProgram codel_pipeline_program(const CodelConfig& config,
                                       const CodelPipelineOptions& options) {
  config.validate();
  if (options.fq_queues == 0)
    throw std::invalid_argument("pipeline: fq_queues must be >= 1");

  PipelineProgram prog;
  prog.law = ControlLaw(config.interval, config.sqrt_mode);
  prog.attach_point = options.attach;

  const MetaId m_delay = prog.meta.id(kMetaQueueDelay);
  const MetaId m_occ = prog.meta.id(kMetaOccupancy);
  const MetaId m_now = prog.meta.id(kMetaNow);
  const MetaId m_qid = prog.meta.id(kMetaQueueId);
  const MetaId m_viol = prog.meta.id(kMetaDelayViolation);
  const MetaId m_first = prog.meta.id(kMetaFirstViolation);
  const MetaId m_cdrop = prog.meta.id(kMetaCodelDrop);
  const MetaId m_drop = prog.meta.id(kMetaDrop);
  prog.verdict_meta = m_drop;

  const std::uint32_t k = options.fq_queues;
  const alu::Value small_limit =
      config.occupancy_unit == OccupancyUnit::Bytes ? config.iface_mtu : 1;

  // stage 0: f_1, stateless violation test.
  {
    alu::BodyBuilder b;
    const auto over_target =
        b.bin(alu::BinOp::Ge, b.in(m_delay),
              b.c(static_cast<alu::Value>(to_ns(config.target))));
    const auto queue_large = b.bin(alu::BinOp::Ge, b.in(m_occ), b.c(small_limit));
    b.output(b.bin(alu::BinOp::And, over_target, queue_large));
    PipelineStage stage;
    stage.ops.push_back(PipelineOp{"f_1", {}, std::nullopt, m_viol, b.take()});
    prog.stages.push_back(std::move(stage));
  }

  // stage 1: S_ALU1 over {dropping}; flags the transition into dropping.
  {
    PipelineStage stage;
    const auto r_dropping =
        stage.registers.add(RegisterSpec{"dropping", 1, k});
    alu::BodyBuilder b;
    const auto was_clear = b.not_of(b.reg(0));
    const auto first = b.bin(alu::BinOp::And, b.in(m_viol), was_clear);
    b.copy(b.reg(0), b.in(m_viol));  // dropping := delay_violation
    b.output(first);
    PipelineOp op{"s_alu1", {r_dropping}, std::nullopt, m_first, b.take()};
    if (k > 1) op.index_meta = m_qid;
    stage.ops.push_back(std::move(op));
    prog.stages.push_back(std::move(stage));
  }

  // stage 2: S_ALU2 over {count, drp_next}; emits 1 when the schedule says
  // drop. Runs for every packet; whatever it scribbles while the gate is
  // closed is dead state because the next first_violation resets both
  // registers. There is no if_3 here, so count always restarts at one.
  {
    PipelineStage stage;
    const auto r_count = stage.registers.add(RegisterSpec{"count", 32, k});
    const auto r_next = stage.registers.add(RegisterSpec{"drp_next", 64, k});
    (void)r_count;
    (void)r_next;
    alu::BodyBuilder b;
    const auto due = b.bin(alu::BinOp::Le, b.reg(1), b.in(m_now));
    const auto not_first = b.not_of(b.in(m_first));
    const auto drop = b.bin(alu::BinOp::And, due, not_first);
    // first violation: count := 1, drp_next := now + law(1), output 0.
    b.guarded_copy(b.in(m_first), b.reg(0), b.c(1));
    const auto law_first = b.control_law(b.reg(0));
    const auto armed_first = b.bin(alu::BinOp::Add, b.in(m_now), law_first);
    b.guarded_copy(b.in(m_first), b.reg(1), armed_first);
    // scheduled drop: count += 1, drp_next := now + law(count).
    const auto bumped = b.bin(alu::BinOp::Add, b.reg(0), b.c(1));
    b.guarded_copy(drop, b.reg(0), bumped);
    const auto law_drop = b.control_law(b.reg(0));
    const auto armed_drop = b.bin(alu::BinOp::Add, b.in(m_now), law_drop);
    b.guarded_copy(drop, b.reg(1), armed_drop);
    b.output(drop);
    PipelineOp op{"s_alu2", {r_count, r_next}, std::nullopt, m_cdrop, b.take()};
    if (k > 1) op.index_meta = m_qid;
    stage.ops.push_back(std::move(op));
    prog.stages.push_back(std::move(stage));
  }

  // stage 3: final gate.
  {
    alu::BodyBuilder b;
    b.output(b.bin(alu::BinOp::And, b.in(m_viol), b.in(m_cdrop)));
    PipelineStage stage;
    stage.ops.push_back(PipelineOp{"drop_gate", {}, std::nullopt, m_drop, b.take()});
    prog.stages.push_back(std::move(stage));
  }

  prog.validate();
  return prog;
}

PipelineProgram codel_pipeline_program(const CodelConfig& config) {
  return codel_pipeline_program(config, CodelPipelineOptions{});
}

}  // namespace codelsim
