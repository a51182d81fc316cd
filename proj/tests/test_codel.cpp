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

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "codelsim/codel.hpp"

using namespace codelsim;

namespace {

constexpr std::int64_t kMs = 1'000'000;  // ns per ms

PacketObservation obs_at(std::int64_t delay_ns, std::uint64_t occupancy,
                         std::int64_t now_ns) {
  return PacketObservation{ns(delay_ns), occupancy, at_ns(now_ns)};
}

// Re-derivation of the state machine as an explicit branch table, kept
// deliberately separate from the library's control flow. The arming
// arithmetic itself (interval/sqrt(count)) is pinned by the exact-value
// cases below, so the oracle may call control_law and still catch any
// structural mistake: wrong branch order, wrong field updated, unsigned
// wraparound in the count delta, or a misplaced tie.
enum class Branch { NoViolation, Enter, ScheduledDrop, Wait };

Branch classify(const CodelState& s, const PacketObservation& o,
                const CodelConfig& cfg) {
  const std::uint64_t small_limit =
      cfg.occupancy_unit == OccupancyUnit::Bytes ? cfg.iface_mtu : 1;
  if (o.queue_delay < cfg.target || o.queue_occupancy < small_limit)
    return Branch::NoViolation;
  if (!s.dropping) return Branch::Enter;
  if (s.drp_next <= o.now) return Branch::ScheduledDrop;
  return Branch::Wait;
}

struct Expected {
  Verdict verdict;
  CodelState state;
};

Expected apply_branch(Branch b, CodelState s, const PacketObservation& o,
                      const CodelConfig& cfg) {
  switch (b) {
    case Branch::NoViolation:
      s.dropping = false;
      return {Verdict::Forward, s};
    case Branch::Enter: {
      s.dropping = true;
      const std::uint32_t tmp = s.count;
      const std::int64_t delta = std::int64_t{s.count} - std::int64_t{s.last_count};
      const bool recent = (o.now - s.drp_next) < 16 * cfg.interval;
      s.count = (cfg.if3_enabled && delta > 1 && recent)
                    ? static_cast<std::uint32_t>(delta)
                    : 1u;
      s.drp_next = o.now + control_law(s.count, cfg);
      s.last_count = tmp;
      return {Verdict::Forward, s};
    }
    case Branch::ScheduledDrop:
      if (s.count != UINT32_MAX) ++s.count;
      s.drp_next = o.now + control_law(s.count, cfg);
      return {Verdict::Drop, s};
    case Branch::Wait:
      return {Verdict::Forward, s};
  }
  return {Verdict::Forward, s};  // unreachable
}

}  // namespace

TEST_CASE("codel_init validates and returns the all-zero state") {
  const CodelConfig cfg;
  const CodelState s = codel_init(cfg);
  CHECK(s.dropping == false);
  CHECK(s.count == 0);
  CHECK(s.last_count == 0);
  CHECK(to_ns(s.drp_next) == 0);
}

TEST_CASE("config validation names the offending field") {
  CodelConfig cfg;
  cfg.target = Duration::zero();
  CHECK_THROWS_WITH_AS(codel_init(cfg), "codel config: target must be positive",
                       std::invalid_argument);

  cfg = CodelConfig{};
  cfg.interval = ns(-1);
  CHECK_THROWS_AS(codel_init(cfg), std::invalid_argument);

  cfg = CodelConfig{};
  cfg.interval = cfg.target;  // equal is as invalid as smaller
  CHECK_THROWS_WITH_AS(codel_init(cfg),
                       "codel config: interval must exceed target",
                       std::invalid_argument);

  cfg = CodelConfig{};
  cfg.iface_mtu = 63;
  CHECK_THROWS_AS(codel_init(cfg), std::invalid_argument);

  CHECK_NOTHROW(codel_init(CodelConfig{}));
}

TEST_CASE("control law exact values at the classic operating point") {
  const CodelConfig cfg;  // interval 100 ms, Exact
  CHECK(to_ns(control_law(1, cfg)) == 100'000'000);
  CHECK(to_ns(control_law(2, cfg)) == 70'710'678);
  CHECK(to_ns(control_law(3, cfg)) == 57'735'027);
  CHECK(to_ns(control_law(4, cfg)) == 50'000'000);
  CHECK(to_ns(control_law(5, cfg)) == 44'721'360);
  CHECK(to_ns(control_law(8, cfg)) == 35'355'339);
  CHECK(to_ns(control_law(9, cfg)) == 33'333'333);
  CHECK(to_ns(control_law(16, cfg)) == 25'000'000);
  CHECK(to_ns(control_law(100, cfg)) == 10'000'000);
}

TEST_CASE("control law rejects count zero") {
  const CodelConfig cfg;
  CHECK_THROWS_AS(control_law(0, cfg), std::invalid_argument);
  CHECK_THROWS_AS(sqrt_interval_exact(0, cfg.interval), std::invalid_argument);
  CHECK_THROWS_AS(sqrt_interval_lut_lz(0, cfg.interval), std::invalid_argument);
  CHECK_THROWS_AS(ControlLaw(cfg.interval, SqrtMode::Exact)(0),
                  std::invalid_argument);
}

TEST_CASE("lut table matches the exact law through count 16") {
  const Duration iv = std::chrono::milliseconds{100};
  for (std::uint32_t c = 1; c <= 16; ++c)
    CHECK(sqrt_interval_lut_lz(c, iv) == sqrt_interval_exact(c, iv));
}

TEST_CASE("leading-zero approximation above the table") {
  const Duration iv = std::chrono::milliseconds{100};
  // k = 4 (even): interval >> 2
  CHECK(to_ns(sqrt_interval_lut_lz(17, iv)) == 25'000'000);
  // k = 5 (odd): (interval >> 2) * 181 / 256
  CHECK(to_ns(sqrt_interval_lut_lz(32, iv)) == 17'675'781);
  // k = 6 (even): interval >> 3
  CHECK(to_ns(sqrt_interval_lut_lz(64, iv)) == 12'500'000);
  CHECK(to_ns(sqrt_interval_lut_lz(100, iv)) == 12'500'000);
  // k = 31 (odd): (interval >> 15) * 181 / 256
  CHECK(to_ns(sqrt_interval_lut_lz(UINT32_MAX, iv)) == 2'157);
}

TEST_CASE("approximation band, monotonicity and positivity") {
  const Duration iv = std::chrono::milliseconds{100};
  const long double iv_ns = 100e6L;
  const long double sqrt2 = std::sqrt(2.0L);
  std::int64_t prev = to_ns(sqrt_interval_lut_lz(1, iv));
  long double worst_hi = 0.0L, worst_lo = 10.0L;
  for (std::uint32_t c = 1; c <= (1u << 20); ++c) {
    const std::int64_t a = to_ns(sqrt_interval_lut_lz(c, iv));
    REQUIRE(a >= 1);
    REQUIRE(a <= prev);  // non-increasing in count
    prev = a;
    const long double ratio = a / (iv_ns / std::sqrt(static_cast<long double>(c)));
    if (ratio > worst_hi) worst_hi = ratio;
    if (ratio < worst_lo) worst_lo = ratio;
  }
  CHECK(worst_hi < sqrt2);       // measured 1.4142086 at count 524287
  CHECK(worst_lo > 0.9998L);     // integer rounding can dip just below 1
  // sparse sweep across the full 32-bit range
  for (std::uint64_t c = 1; c <= UINT32_MAX; c = c * 2 + 1) {
    const auto cc = static_cast<std::uint32_t>(c);
    const long double ratio = to_ns(sqrt_interval_lut_lz(cc, iv)) /
                              (iv_ns / std::sqrt(static_cast<long double>(cc)));
    CHECK(ratio < sqrt2);
    CHECK(ratio > 0.9998L);
  }
}

TEST_CASE("ControlLaw evaluator agrees with the free functions") {
  const Duration iv = std::chrono::milliseconds{100};
  const ControlLaw exact(iv, SqrtMode::Exact);
  const ControlLaw lut(iv, SqrtMode::LutLz);
  std::mt19937_64 rng(7);
  for (std::uint32_t c = 1; c <= 4096; ++c) {
    CHECK(exact(c) == sqrt_interval_exact(c, iv));
    CHECK(lut(c) == sqrt_interval_lut_lz(c, iv));
  }
  for (int i = 0; i < 1000; ++i) {
    const auto c = static_cast<std::uint32_t>(rng() % UINT32_MAX) + 1;
    CHECK(exact(c) == sqrt_interval_exact(c, iv));
    CHECK(lut(c) == sqrt_interval_lut_lz(c, iv));
  }
}

TEST_CASE("if_1 forwards and leaves the dropping state") {
  const CodelConfig cfg;
  CodelState s{.dropping = true, .count = 7, .last_count = 3,
               .drp_next = at_ns(500 * kMs)};

  SUBCASE("delay below target") {
    const Decision d = codel_decide(s, obs_at(2 * kMs, 50'000, 600 * kMs), cfg);
    CHECK(d.verdict == Verdict::Forward);
    CHECK(d.state.dropping == false);
    CHECK(d.state.count == 7);
    CHECK(d.state.last_count == 3);
    CHECK(d.state.drp_next == s.drp_next);
  }
  SUBCASE("queue below one MTU") {
    const Decision d = codel_decide(s, obs_at(9 * kMs, 1'499, 600 * kMs), cfg);
    CHECK(d.verdict == Verdict::Forward);
    CHECK(d.state.dropping == false);
  }
  SUBCASE("occupancy at exactly one MTU is not small") {
    const Decision d = codel_decide(CodelState{}, obs_at(9 * kMs, 1'500, 0), cfg);
    CHECK(d.state.dropping == true);
  }
  SUBCASE("delay at exactly the target is a violation") {
    const Decision d = codel_decide(CodelState{}, obs_at(5 * kMs, 30'000, 0), cfg);
    CHECK(d.state.dropping == true);
  }
  SUBCASE("packet-count occupancy compares against one packet") {
    CodelConfig pc = cfg;
    pc.occupancy_unit = OccupancyUnit::Packets;
    CHECK(codel_decide(s, obs_at(9 * kMs, 0, 600 * kMs), pc).state.dropping == false);
    CHECK(codel_decide(CodelState{}, obs_at(9 * kMs, 1, 0), pc).state.dropping == true);
  }
}

TEST_CASE("if_2 arms the first drop one interval out and never drops") {
  const CodelConfig cfg;
  const Decision d =
      codel_decide(codel_init(cfg), obs_at(8 * kMs, 30'000, 1000 * kMs), cfg);
  CHECK(d.verdict == Verdict::Forward);
  CHECK(d.state.dropping == true);
  CHECK(d.state.count == 1);
  CHECK(d.state.last_count == 0);
  CHECK(to_ns(d.state.drp_next) == 1'100'000'000);
}

TEST_CASE("if_4 drops on schedule, ties included, and tightens the schedule") {
  const CodelConfig cfg;
  CodelState s{.dropping = true, .count = 1, .last_count = 0,
               .drp_next = at_ns(1'100'000'000)};

  SUBCASE("drp_next equal to now drops") {
    const Decision d = codel_decide(s, obs_at(8 * kMs, 30'000, 1'100'000'000), cfg);
    CHECK(d.verdict == Verdict::Drop);
    CHECK(d.state.count == 2);
    CHECK(to_ns(d.state.drp_next) == 1'170'710'678);
    CHECK(d.state.last_count == 0);
    CHECK(d.state.dropping == true);
  }
  SUBCASE("one nanosecond early only waits") {
    const Decision d = codel_decide(s, obs_at(8 * kMs, 30'000, 1'099'999'999), cfg);
    CHECK(d.verdict == Verdict::Forward);
    CHECK(d.state == s);
  }
  SUBCASE("count saturates instead of wrapping") {
    CodelState sat = s;
    sat.count = UINT32_MAX;
    const Decision d = codel_decide(sat, obs_at(8 * kMs, 30'000, 1'100'000'000), cfg);
    CHECK(d.verdict == Verdict::Drop);
    CHECK(d.state.count == UINT32_MAX);
  }
}

TEST_CASE("if_3 reseeds count from the previous episode") {
  const CodelConfig cfg;
  const std::int64_t t0 = 2'000 * kMs;  // previous episode's drp_next
  CodelState s{.dropping = false, .count = 10, .last_count = 2,
               .drp_next = at_ns(t0)};

  SUBCASE("recent episode resumes at the delta") {
    const auto o = obs_at(8 * kMs, 30'000, t0 + 50 * kMs);
    const Decision d = codel_decide(s, o, cfg);
    CHECK(d.verdict == Verdict::Forward);
    CHECK(d.state.count == 8);
    CHECK(d.state.last_count == 10);
    CHECK(to_ns(d.state.drp_next) == t0 + 50 * kMs + 35'355'339);
  }
  SUBCASE("a window of exactly 16 intervals has already expired") {
    const Decision d = codel_decide(s, obs_at(8 * kMs, 30'000, t0 + 1'600 * kMs), cfg);
    CHECK(d.state.count == 1);
    CHECK(d.state.last_count == 10);
  }
  SUBCASE("delta of one restarts at one") {
    CodelState near = s;
    near.count = 3;
    near.last_count = 2;
    const Decision d = codel_decide(near, obs_at(8 * kMs, 30'000, t0 + 50 * kMs), cfg);
    CHECK(d.state.count == 1);
  }
  SUBCASE("negative delta must not wrap to a large unsigned value") {
    CodelState shrink = s;
    shrink.count = 2;
    shrink.last_count = 10;
    const Decision d = codel_decide(shrink, obs_at(8 * kMs, 30'000, t0 + 50 * kMs), cfg);
    CHECK(d.state.count == 1);
  }
  SUBCASE("disabled if_3 always restarts at one") {
    CodelConfig no3 = cfg;
    no3.if3_enabled = false;
    const Decision d = codel_decide(s, obs_at(8 * kMs, 30'000, t0 + 50 * kMs), no3);
    CHECK(d.state.count == 1);
    CHECK(d.state.last_count == 10);
  }
  SUBCASE("now before drp_next keeps the window open") {
    // A violation can re-arrive before the previously armed drop time;
    // the signed difference is negative and well inside the window.
    const Decision d = codel_decide(s, obs_at(8 * kMs, 30'000, t0 - 10 * kMs), cfg);
    CHECK(d.state.count == 8);
  }
}

TEST_CASE("drop spacing within an episode follows the control law") {
  const CodelConfig cfg;
  CodelState s = codel_init(cfg);
  Decision d = codel_decide(s, obs_at(8 * kMs, 30'000, 1'000 * kMs), cfg);
  const std::vector<std::int64_t> expected_drops = {
      1'100'000'000, 1'170'710'678, 1'228'445'705, 1'278'445'705, 1'323'167'065};
  for (std::size_t i = 0; i < expected_drops.size(); ++i) {
    const std::int64_t t = to_ns(d.state.drp_next);
    CHECK(t == expected_drops[i]);
    d = codel_decide(d.state, obs_at(8 * kMs, 30'000, t), cfg);
    CHECK(d.verdict == Verdict::Drop);
    CHECK(d.state.count == static_cast<std::uint32_t>(i) + 2);
  }
}

TEST_CASE("a recovery packet always exits the dropping state") {
  const CodelConfig cfg;
  std::mt19937_64 rng(0xC0DE1u);
  for (int i = 0; i < 2'000; ++i) {
    const CodelState s{.dropping = (rng() & 1) != 0,
                       .count = static_cast<std::uint32_t>(rng() % 1000),
                       .last_count = static_cast<std::uint32_t>(rng() % 1000),
                       .drp_next = at_ns(static_cast<std::int64_t>(rng() % 4'000'000'000))};
    const std::int64_t now = 4'000'000'000 + static_cast<std::int64_t>(rng() % 1'000'000'000);
    const bool below = (rng() & 1) != 0;
    const auto o = below ? obs_at(static_cast<std::int64_t>(rng() % (5 * kMs)), 30'000, now)
                         : obs_at(9 * kMs, rng() % 1'500, now);
    const Decision d = codel_decide(s, o, cfg);
    CHECK(d.verdict == Verdict::Forward);
    CHECK(d.state.dropping == false);
    CHECK(d.state.count == s.count);
    CHECK(d.state.last_count == s.last_count);
    CHECK(d.state.drp_next == s.drp_next);
  }
}

TEST_CASE("the packet that enters the dropping state is never dropped") {
  const CodelConfig cfg;
  std::mt19937_64 rng(0xC0DE2u);
  for (int i = 0; i < 2'000; ++i) {
    CodelState s{.dropping = false,
                 .count = static_cast<std::uint32_t>(rng() % 50),
                 .last_count = static_cast<std::uint32_t>(rng() % 50),
                 .drp_next = at_ns(static_cast<std::int64_t>(rng() % 2'000'000'000))};
    const std::int64_t now = static_cast<std::int64_t>(rng() % 4'000'000'000);
    const auto o = obs_at(5 * kMs + static_cast<std::int64_t>(rng() % (20 * kMs)),
                          1'500 + rng() % 100'000, now);
    const Decision d = codel_decide(s, o, cfg);
    CHECK(d.verdict == Verdict::Forward);
    CHECK(d.state.dropping == true);
  }
}

TEST_CASE("every transition matches the branch table") {
  // Lockstep replay against the independent oracle above, with a driver
  // that steers into each branch often enough to cover all of them.
  for (const bool if3 : {true, false}) {
    for (const SqrtMode mode : {SqrtMode::Exact, SqrtMode::LutLz}) {
      CodelConfig cfg;
      cfg.if3_enabled = if3;
      cfg.sqrt_mode = mode;
      CodelState s = codel_init(cfg);
      std::mt19937_64 rng(0xC0DE3u);
      std::int64_t now = 0;
      int hits[4] = {0, 0, 0, 0};
      int reseeds = 0;
      for (int step = 0; step < 30'000; ++step) {
        const std::uint64_t pick = rng() % 10;
        std::int64_t delay;
        std::uint64_t occ = 1'500 + rng() % 60'000;
        if (pick < 2) {
          delay = static_cast<std::int64_t>(rng() % (5 * kMs));  // below target
        } else if (pick == 2) {
          delay = 5 * kMs + static_cast<std::int64_t>(rng() % (20 * kMs));
          occ = rng() % 1'500;  // nearly empty queue
        } else {
          delay = 5 * kMs + static_cast<std::int64_t>(rng() % (20 * kMs));
        }
        if (pick >= 8 && s.dropping && to_ns(s.drp_next) >= now) {
          now = to_ns(s.drp_next) + static_cast<std::int64_t>(rng() % 3) - 1;
          if (now < 0) now = 0;
        } else if (pick == 7) {
          now += 1'700 * kMs;  // jump past the 16-interval window
        } else {
          now += static_cast<std::int64_t>(rng() % (40 * kMs));
        }
        const auto o = obs_at(delay, occ, now);
        const Branch b = classify(s, o, cfg);
        const Expected want = apply_branch(b, s, o, cfg);
        const Decision got = codel_decide(s, o, cfg);
        REQUIRE(got.verdict == want.verdict);
        REQUIRE(got.state == want.state);
        hits[static_cast<int>(b)]++;
        if (b == Branch::Enter && want.state.count > 1) reseeds++;
        s = got.state;
      }
      CHECK(hits[0] > 1'000);  // NoViolation
      CHECK(hits[1] > 1'000);  // Enter
      CHECK(hits[2] > 1'000);  // ScheduledDrop
      CHECK(hits[3] > 1'000);  // Wait
      if (if3)
        CHECK(reseeds > 50);
      else
        CHECK(reseeds == 0);
    }
  }
}

TEST_CASE("decisions are a pure function of their inputs") {
  const CodelConfig cfg;
  std::mt19937_64 rng(0xC0DE4u);
  for (int i = 0; i < 1'000; ++i) {
    const CodelState s{.dropping = (rng() & 1) != 0,
                       .count = static_cast<std::uint32_t>(rng() % 100) + 1,
                       .last_count = static_cast<std::uint32_t>(rng() % 100),
                       .drp_next = at_ns(static_cast<std::int64_t>(rng() % 2'000'000'000))};
    const auto o = obs_at(static_cast<std::int64_t>(rng() % (30 * kMs)),
                          rng() % 100'000,
                          static_cast<std::int64_t>(rng() % 4'000'000'000));
    const Decision a = codel_decide(s, o, cfg);
    const Decision b = codel_decide(s, o, cfg);
    CHECK(a.verdict == b.verdict);
    CHECK(a.state == b.state);
  }
}
