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

#include <benchmark/benchmark.h>

#include <chrono>
#include <random>
#include <vector>

#include "codelsim/codel.hpp"
#include "codelsim/pipeline.hpp"
#include "codelsim/scenario.hpp"

namespace {

using namespace codelsim;

SqrtMode mode_arg(const benchmark::State& state) {
  return state.range(0) == 0 ? SqrtMode::Exact : SqrtMode::LutLz;
}

// One CoDel decision on a stream that oscillates around the 5 ms target,
// exercising all four transitions.
void BM_CodelDecide(benchmark::State& state) {
  CodelConfig cfg;
  cfg.sqrt_mode = mode_arg(state);
  CodelState st = codel_init(cfg);

  std::mt19937_64 rng(1);
  std::vector<PacketObservation> obs(4096);
  std::int64_t t = 0;
  for (PacketObservation& o : obs) {
    t += 120'000;
    o.queue_delay = ns(3'000'000 + static_cast<std::int64_t>(rng() % 4'000'000));
    o.queue_occupancy = 3'000 + rng() % 30'000;
    o.now = at_ns(t);
  }
  const Duration wrap = ns(t);

  std::size_t i = 0;
  for (auto _ : state) {
    const Decision d = codel_decide(st, obs[i], cfg);
    st = d.state;
    benchmark::DoNotOptimize(st);
    if (++i == obs.size()) {
      i = 0;
      for (PacketObservation& o : obs) o.now += wrap;  // keep now monotone
    }
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_CodelDecide)->Arg(0)->Arg(1)->ArgName("lut");

void BM_ControlLaw(benchmark::State& state) {
  const ControlLaw law(std::chrono::milliseconds{100}, mode_arg(state));
  std::uint32_t count = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(law(count));
    count = count % 4096 + 1;
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_ControlLaw)->Arg(0)->Arg(1)->ArgName("lut");

// One packet through the four-stage pipeline program, including the
// metadata copy a real per-packet invocation pays.
void BM_PipelinePacket(benchmark::State& state) {
  CodelConfig cfg;
  cfg.sqrt_mode = mode_arg(state);
  PipelineProgram prog = codel_pipeline_program(cfg);
  const MetaId delay_id = prog.meta.id(kMetaQueueDelay);
  const MetaId occ_id = prog.meta.id(kMetaOccupancy);
  const MetaId now_id = prog.meta.id(kMetaNow);

  std::mt19937_64 rng(1);
  std::vector<alu::Value> meta = prog.make_meta();
  std::uint64_t now = 0;
  for (auto _ : state) {
    now += 120'000;
    meta[delay_id] = 3'000'000 + rng() % 4'000'000;
    meta[occ_id] = 3'000 + rng() % 30'000;
    meta[now_id] = now;
    const RunResult r = run_pipeline(prog, meta);
    benchmark::DoNotOptimize(r.verdict);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_PipelinePacket)->Arg(0)->Arg(1)->ArgName("lut");

// End-to-end simulation throughput: one 500 ms single-TCP scenario per
// iteration, reported in simulated packets per second of wall time.
void BM_ScenarioRun(benchmark::State& state) {
  ScenarioConfig cfg;
  cfg.variant =
      state.range(0) == 0 ? AqmVariant::ReferenceCodel : AqmVariant::PipelineCodel;
  cfg.duration = std::chrono::milliseconds{500};
  FlowSpec tcp;
  tcp.kind = FlowKind::Tcp;
  cfg.flows.push_back(tcp);

  std::uint64_t packets = 0;
  for (auto _ : state) {
    const ScenarioResult res = run_scenario(cfg);
    packets += res.rows.size();
    benchmark::DoNotOptimize(res.summary.aggregate.delivered);
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(packets));
}
BENCHMARK(BM_ScenarioRun)->Arg(0)->Arg(1)->ArgName("pipeline")
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
