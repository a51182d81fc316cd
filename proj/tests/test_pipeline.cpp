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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "codelsim/codel.hpp"
#include "codelsim/pipeline.hpp"

using namespace codelsim;

namespace {

constexpr std::int64_t kMs = 1'000'000;

struct MetaIds {
  MetaId delay, occ, now, qid;
};

MetaIds meta_ids(const PipelineProgram& p) {
  return MetaIds{*p.meta.lookup(kMetaQueueDelay), *p.meta.lookup(kMetaOccupancy),
                 *p.meta.lookup(kMetaNow), *p.meta.lookup(kMetaQueueId)};
}

std::vector<alu::Value> make_packet(const PipelineProgram& p, const MetaIds& ids,
                                    std::int64_t delay_ns, std::uint64_t occ,
                                    std::int64_t now_ns, std::uint32_t qid = 0) {
  auto meta = p.make_meta();
  meta[ids.delay] = static_cast<alu::Value>(delay_ns);
  meta[ids.occ] = occ;
  meta[ids.now] = static_cast<alu::Value>(now_ns);
  meta[ids.qid] = qid;
  return meta;
}

Verdict pipe_step(PipelineProgram& p, const MetaIds& ids, std::int64_t delay_ns,
                  std::uint64_t occ, std::int64_t now_ns, std::uint32_t qid = 0) {
  return run_pipeline(p, make_packet(p, ids, delay_ns, occ, now_ns, qid)).verdict;
}

// The three stateful cells of the single-queue CoDel program.
struct CodelRegs {
  alu::Value dropping, count, drp_next;
};

CodelRegs read_regs(const PipelineProgram& p, std::uint32_t qid = 0) {
  return CodelRegs{p.stages[1].registers.read(0, qid),
                   p.stages[2].registers.read(0, qid),
                   p.stages[2].registers.read(1, qid)};
}

void write_regs(PipelineProgram& p, const CodelRegs& r, std::uint32_t qid = 0) {
  PipelineStage& s1 = p.stages[1];
  PipelineStage& s2 = p.stages[2];
  s1.registers.write(0, qid, r.dropping);
  s2.registers.write(0, qid, r.count);
  s2.registers.write(1, qid, r.drp_next);
}

}  // namespace

TEST_CASE("the generated program has the four published stages") {
  const PipelineProgram p = codel_pipeline_program(CodelConfig{});
  REQUIRE(p.stages.size() == 4);
  CHECK(p.stages[0].ops.at(0).name == "f_1");
  CHECK_FALSE(p.stages[0].ops[0].stateful());
  CHECK(p.stages[1].ops.at(0).name == "s_alu1");
  CHECK(p.stages[1].ops[0].registers.size() == 1);
  CHECK(p.stages[1].registers.spec(0).name == "dropping");
  CHECK(p.stages[2].ops.at(0).name == "s_alu2");
  CHECK(p.stages[2].ops[0].registers.size() == 2);
  CHECK(p.stages[2].registers.spec(0).name == "count");
  CHECK(p.stages[2].registers.spec(1).name == "drp_next");
  CHECK(p.stages[3].ops.at(0).name == "drop_gate");
  CHECK_FALSE(p.stages[3].ops[0].stateful());
  CHECK_NOTHROW(p.validate());
}

TEST_CASE("a low-delay trace forwards everything and never arms") {
  PipelineProgram p = codel_pipeline_program(CodelConfig{});
  const MetaIds ids = meta_ids(p);
  for (int i = 0; i < 500; ++i) {
    CHECK(pipe_step(p, ids, 2 * kMs, 30'000, i * kMs) == Verdict::Forward);
  }
  CHECK(read_regs(p).dropping == 0);
}

TEST_CASE("frozen two-packet episode matches the reference numbers") {
  PipelineProgram p = codel_pipeline_program(CodelConfig{});
  const MetaIds ids = meta_ids(p);

  auto r1 = run_pipeline(p, make_packet(p, ids, 8 * kMs, 30'000, 1'000 * kMs));
  CHECK(r1.verdict == Verdict::Forward);
  CHECK(r1.meta[*p.meta.lookup(kMetaDelayViolation)] == 1);
  CHECK(r1.meta[*p.meta.lookup(kMetaFirstViolation)] == 1);
  CHECK(r1.meta[*p.meta.lookup(kMetaCodelDrop)] == 0);
  CodelRegs regs = read_regs(p);
  CHECK(regs.dropping == 1);
  CHECK(regs.count == 1);
  CHECK(regs.drp_next == 1'100'000'000u);

  auto r2 = run_pipeline(p, make_packet(p, ids, 8 * kMs, 30'000, 1'100 * kMs));
  CHECK(r2.verdict == Verdict::Drop);
  regs = read_regs(p);
  CHECK(regs.count == 2);
  CHECK(regs.drp_next == 1'170'710'678u);
}

TEST_CASE("first drop lands exactly one interval after the first violation") {
  PipelineProgram p = codel_pipeline_program(CodelConfig{});
  const MetaIds ids = meta_ids(p);
  const std::int64_t t0 = 50 * kMs;
  int first_drop = -1;
  for (int i = 0; i <= 150; ++i) {
    const Verdict v = pipe_step(p, ids, 8 * kMs, 30'000, t0 + i * kMs);
    if (v == Verdict::Drop) {
      first_drop = i;
      break;
    }
  }
  CHECK(first_drop == 100);  // 100 ms interval at 1 ms packet spacing
}

TEST_CASE("pipeline verdicts equal the reference without if_3 on random traces") {
  for (const SqrtMode mode : {SqrtMode::Exact, SqrtMode::LutLz}) {
    CodelConfig cfg;
    cfg.if3_enabled = false;
    cfg.sqrt_mode = mode;
    PipelineProgram p = codel_pipeline_program(cfg);
    const MetaIds ids = meta_ids(p);
    CodelState ref = codel_init(cfg);

    std::mt19937_64 rng(0xF0F0u + static_cast<unsigned>(mode));
    std::int64_t now = 0;
    long mismatches = 0;
    long drops = 0;
    for (int step = 0; step < 150'000; ++step) {
      const std::uint64_t pick = rng() % 10;
      std::int64_t delay = 5 * kMs + static_cast<std::int64_t>(rng() % (20 * kMs));
      std::uint64_t occ = 1'500 + rng() % 60'000;
      if (pick < 2) delay = static_cast<std::int64_t>(rng() % (5 * kMs));
      if (pick == 2) occ = rng() % 1'500;
      if (pick >= 8 && ref.dropping && to_ns(ref.drp_next) >= now) {
        now = to_ns(ref.drp_next) + static_cast<std::int64_t>(rng() % 3) - 1;
        if (now < 0) now = 0;
      } else {
        now += static_cast<std::int64_t>(rng() % (40 * kMs));
      }
      const Verdict pv = pipe_step(p, ids, delay, occ, now);
      const Decision rd =
          codel_decide(ref, PacketObservation{ns(delay), occ, at_ns(now)}, cfg);
      ref = rd.state;
      if (pv != rd.verdict) ++mismatches;
      if (rd.verdict == Verdict::Drop) ++drops;
    }
    CHECK(mismatches == 0);
    CHECK(drops > 1'000);  // the trace must actually exercise the drop path
  }
}

TEST_CASE("pipeline verdicts equal the reference on all short traces") {
  struct Sym {
    std::int64_t delay, dt;
    std::uint64_t occ;
  };
  const Sym alphabet[8] = {
      {2 * kMs, 0, 30'000}, {2 * kMs, 30 * kMs, 30'000},
      {8 * kMs, 0, 800},    {8 * kMs, 30 * kMs, 800},
      {8 * kMs, 0, 30'000}, {8 * kMs, 30 * kMs, 30'000},
      {2 * kMs, 0, 800},    {8 * kMs, 110 * kMs, 30'000},
  };
  CodelConfig cfg;
  cfg.if3_enabled = false;
  PipelineProgram p = codel_pipeline_program(cfg);
  const MetaIds ids = meta_ids(p);

  long mismatches = 0;
  long nodes = 0;
  // Depth-first over every trace of length <= 6, restoring the pipeline's
  // three stateful cells on backtrack so prefixes are shared.
  auto dfs = [&](auto&& self, int depth, const CodelState& ref,
                 std::int64_t now) -> void {
    if (depth == 6) return;
    for (const Sym& sym : alphabet) {
      const std::int64_t t = now + sym.dt;
      const CodelRegs snap = read_regs(p);
      const Verdict pv = pipe_step(p, ids, sym.delay, sym.occ, t);
      const Decision rd = codel_decide(
          ref, PacketObservation{ns(sym.delay), sym.occ, at_ns(t)}, cfg);
      ++nodes;
      if (pv != rd.verdict) ++mismatches;
      self(self, depth + 1, rd.state, t);
      write_regs(p, snap);
    }
  };
  dfs(dfs, 0, codel_init(cfg), 0);
  CHECK(nodes == 299'592);  // 8 + 8^2 + ... + 8^6
  CHECK(mismatches == 0);
}

TEST_CASE("wave execution equals one-packet-at-a-time execution") {
  CodelConfig cfg;
  cfg.if3_enabled = false;
  PipelineProgram seq = codel_pipeline_program(cfg);
  PipelineProgram wave = codel_pipeline_program(cfg);
  const MetaIds ids = meta_ids(seq);

  std::mt19937_64 rng(0xAA11u);
  std::vector<std::vector<alu::Value>> packets;
  std::int64_t now = 0;
  for (int i = 0; i < 20'000; ++i) {
    now += static_cast<std::int64_t>(rng() % (3 * kMs));
    const std::int64_t delay = static_cast<std::int64_t>(rng() % (15 * kMs));
    const std::uint64_t occ = rng() % 40'000;
    packets.push_back(make_packet(seq, ids, delay, occ, now));
  }
  const std::vector<RunResult> w = run_pipeline_wave(wave, packets);
  REQUIRE(w.size() == packets.size());
  long mismatches = 0;
  for (std::size_t i = 0; i < packets.size(); ++i) {
    const RunResult s = run_pipeline(seq, packets[i]);
    if (s.verdict != w[i].verdict || s.meta != w[i].meta) ++mismatches;
  }
  CHECK(mismatches == 0);
}

TEST_CASE("in-flight packets observe whole predecessor updates only") {
  // A counter ALU: every packet reads the register, adds one, writes it
  // back, and publishes the new value. Under wave execution the published
  // sequence must be exactly 1..n: packet n+1 always sees packet n's
  // completed write, never a stale or torn value.
  PipelineProgram prog;
  const MetaId m_counted = prog.meta.id("counted");
  const MetaId m_drop = prog.meta.id("drop");
  prog.verdict_meta = m_drop;
  {
    PipelineStage stage;
    const auto r = stage.registers.add(RegisterSpec{"c", 32, 1});
    alu::BodyBuilder b;
    const auto bumped = b.bin(alu::BinOp::Add, b.reg(0), b.c(1));
    b.copy(b.reg(0), bumped);
    b.output(bumped);
    stage.ops.push_back(PipelineOp{"count_up", {r}, std::nullopt, m_counted, b.take()});
    prog.stages.push_back(std::move(stage));
  }
  // A dependent accumulator one stage later: running sum of the counter.
  const MetaId m_sum = prog.meta.id("sum");
  {
    PipelineStage stage;
    const auto r = stage.registers.add(RegisterSpec{"acc", 64, 1});
    alu::BodyBuilder b;
    const auto s = b.bin(alu::BinOp::Add, b.reg(0), b.in(m_counted));
    b.copy(b.reg(0), s);
    b.output(s);
    stage.ops.push_back(PipelineOp{"accumulate", {r}, std::nullopt, m_sum, b.take()});
    prog.stages.push_back(std::move(stage));
  }
  prog.validate();

  const int n = 1'000;
  std::vector<std::vector<alu::Value>> packets(n, prog.make_meta());
  const auto results = run_pipeline_wave(prog, packets);
  for (int i = 0; i < n; ++i) {
    const alu::Value k = static_cast<alu::Value>(i) + 1;
    REQUIRE(results[i].meta[m_counted] == k);
    REQUIRE(results[i].meta[m_sum] == k * (k + 1) / 2);
  }
  CHECK(prog.stages[0].registers.read(0, 0) == static_cast<alu::Value>(n));
}

TEST_CASE("two packets through a counter give register values 1 then 2") {
  PipelineProgram prog;
  const MetaId m_counted = prog.meta.id("counted");
  prog.verdict_meta = prog.meta.id("drop");
  PipelineStage stage;
  const auto r = stage.registers.add(RegisterSpec{"c", 32, 1});
  alu::BodyBuilder b;
  const auto bumped = b.bin(alu::BinOp::Add, b.reg(0), b.c(1));
  b.copy(b.reg(0), bumped);
  b.output(bumped);
  stage.ops.push_back(PipelineOp{"count_up", {r}, std::nullopt, m_counted, b.take()});
  prog.stages.push_back(std::move(stage));
  prog.validate();

  CHECK(run_pipeline(prog, prog.make_meta()).meta[m_counted] == 1);
  CHECK(run_pipeline(prog, prog.make_meta()).meta[m_counted] == 2);
  CHECK(prog.stages[0].registers.read(r, 0) == 2);
}

TEST_CASE("identity program forwards with metadata unchanged") {
  PipelineProgram prog;
  const MetaId m_x = prog.meta.id("x");
  prog.verdict_meta = prog.meta.id("drop");
  prog.stages.push_back(PipelineStage{});  // a stage with no ops
  prog.validate();
  auto meta = prog.make_meta();
  meta[m_x] = 42;
  const RunResult r = run_pipeline(prog, meta);
  CHECK(r.verdict == Verdict::Forward);
  CHECK(r.meta[m_x] == 42);
}

TEST_CASE("fq register arrays keep queues independent") {
  CodelConfig cfg;
  cfg.if3_enabled = false;
  CodelPipelineOptions opt;
  opt.fq_queues = 4;
  PipelineProgram p = codel_pipeline_program(cfg, opt);
  const MetaIds ids = meta_ids(p);

  SUBCASE("a dropping episode on one queue leaves the others untouched") {
    for (int i = 0; i <= 120; ++i)
      pipe_step(p, ids, 8 * kMs, 30'000, i * kMs, 2);
    CHECK(read_regs(p, 2).dropping == 1);
    CHECK(read_regs(p, 2).count >= 1);
    for (const std::uint32_t q : {0u, 1u, 3u}) {
      const CodelRegs r = read_regs(p, q);
      CHECK(r.dropping == 0);
      CHECK(r.count == 0);
      CHECK(r.drp_next == 0);
    }
  }

  SUBCASE("each queue tracks its own independent reference state") {
    std::vector<CodelState> refs(4, codel_init(cfg));
    std::mt19937_64 rng(0xF0F1u);
    std::int64_t now = 0;
    long mismatches = 0;
    for (int step = 0; step < 40'000; ++step) {
      const auto qid = static_cast<std::uint32_t>(rng() % 4);
      now += static_cast<std::int64_t>(rng() % (20 * kMs));
      const std::int64_t delay =
          (rng() % 3 == 0) ? static_cast<std::int64_t>(rng() % (5 * kMs))
                           : 5 * kMs + static_cast<std::int64_t>(rng() % (20 * kMs));
      const std::uint64_t occ = 1'500 + rng() % 40'000;
      const Verdict pv = pipe_step(p, ids, delay, occ, now, qid);
      const Decision rd = codel_decide(
          refs[qid], PacketObservation{ns(delay), occ, at_ns(now)}, cfg);
      refs[qid] = rd.state;
      if (pv != rd.verdict) ++mismatches;
    }
    CHECK(mismatches == 0);
  }
}

TEST_CASE("register writes are masked to the declared width") {
  RegisterFile rf;
  const auto id = rf.add(RegisterSpec{"w3", 3, 1});
  rf.write(id, 0, 0xFF);
  CHECK(rf.read(id, 0) == 7);
  const auto full = rf.add(RegisterSpec{"w64", 64, 1});
  rf.write(full, 0, ~alu::Value{0});
  CHECK(rf.read(full, 0) == ~alu::Value{0});
  CHECK_THROWS_AS(rf.add(RegisterSpec{"bad", 0, 1}), std::invalid_argument);
  CHECK_THROWS_AS(rf.add(RegisterSpec{"bad", 65, 1}), std::invalid_argument);
  CHECK_THROWS_AS(rf.add(RegisterSpec{"bad", 8, 0}), std::invalid_argument);
}

TEST_CASE("program validation rejects ill-formed pipelines") {
  SUBCASE("two stateful ops in one stage") {
    PipelineProgram prog;
    prog.verdict_meta = prog.meta.id("drop");
    PipelineStage stage;
    const auto r1 = stage.registers.add(RegisterSpec{"a", 32, 1});
    const auto r2 = stage.registers.add(RegisterSpec{"b", 32, 1});
    alu::BodyBuilder b1;
    b1.copy(b1.reg(0), b1.c(1));
    stage.ops.push_back(PipelineOp{"one", {r1}, std::nullopt, std::nullopt, b1.take()});
    alu::BodyBuilder b2;
    b2.copy(b2.reg(0), b2.c(1));
    stage.ops.push_back(PipelineOp{"two", {r2}, std::nullopt, std::nullopt, b2.take()});
    prog.stages.push_back(std::move(stage));
    CHECK_THROWS_AS(prog.validate(), std::invalid_argument);
  }
  SUBCASE("op exceeding the ALU register capacity") {
    PipelineProgram prog;
    prog.verdict_meta = prog.meta.id("drop");
    PipelineStage stage;
    const auto r1 = stage.registers.add(RegisterSpec{"a", 32, 1});
    const auto r2 = stage.registers.add(RegisterSpec{"b", 32, 1});
    const auto r3 = stage.registers.add(RegisterSpec{"c", 32, 1});
    alu::BodyBuilder b;
    b.copy(b.reg(0), b.c(1));
    stage.ops.push_back(
        PipelineOp{"wide", {r1, r2, r3}, std::nullopt, std::nullopt, b.take()});
    prog.stages.push_back(std::move(stage));
    CHECK_THROWS_AS(prog.validate(), std::invalid_argument);
  }
  SUBCASE("register array without an index field") {
    PipelineProgram prog;
    prog.verdict_meta = prog.meta.id("drop");
    PipelineStage stage;
    const auto r = stage.registers.add(RegisterSpec{"arr", 32, 8});
    alu::BodyBuilder b;
    b.copy(b.reg(0), b.c(1));
    stage.ops.push_back(PipelineOp{"no_index", {r}, std::nullopt, std::nullopt, b.take()});
    prog.stages.push_back(std::move(stage));
    CHECK_THROWS_AS(prog.validate(), std::invalid_argument);
  }
  SUBCASE("metadata record of the wrong arity") {
    PipelineProgram p = codel_pipeline_program(CodelConfig{});
    CHECK_THROWS_AS(run_pipeline(p, std::vector<alu::Value>{}), std::invalid_argument);
  }
  SUBCASE("zero fq queues") {
    CodelPipelineOptions opt;
    opt.fq_queues = 0;
    CHECK_THROWS_AS(codel_pipeline_program(CodelConfig{}, opt), std::invalid_argument);
  }
}
