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

#include "codelsim/scenario.hpp"

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <random>
#include <sstream>
#include <stdexcept>

#include "codelsim/event_queue.hpp"
#include "codelsim/tcp.hpp"
#include "codelsim/udp.hpp"

namespace codelsim {

namespace {

// CODELSIM_LOG: quiet (default) | info | debug, written to stderr
int log_level() {
  static const int level = [] {
    const char* v = std::getenv("CODELSIM_LOG");
    if (v == nullptr) return 0;
    const std::string s(v);
    if (s == "debug") return 2;
    if (s == "info") return 1;
    return 0;
  }();
  return level;
}

void log_info(const std::string& msg) {
  if (log_level() >= 1) std::fprintf(stderr, "codelsim: %s\n", msg.c_str());
}

std::string trim(const std::string& s) {
  const std::size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const std::size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::uint64_t parse_u64(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(text, &used);
    if (used != text.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument(what + ": bad number '" + text + "'");
  }
}

// splits "123suffix" into the number and the suffix
std::pair<std::uint64_t, std::string> split_scaled(const std::string& text,
                                                   const std::string& what) {
  std::size_t i = 0;
  while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
  if (i == 0) throw std::invalid_argument(what + ": bad value '" + text + "'");
  return {parse_u64(text.substr(0, i), what), text.substr(i)};
}

}  // namespace

Duration parse_duration(const std::string& text) {
  const auto [v, unit] = split_scaled(text, "duration");
  if (unit == "ns") return ns(static_cast<std::int64_t>(v));
  if (unit == "us") return ns(static_cast<std::int64_t>(v) * 1'000);
  if (unit == "ms") return ns(static_cast<std::int64_t>(v) * 1'000'000);
  if (unit == "s") return ns(static_cast<std::int64_t>(v) * 1'000'000'000);
  throw std::invalid_argument("duration: unknown unit '" + unit + "' (use ns/us/ms/s)");
}

std::uint64_t parse_rate(const std::string& text) {
  auto [v, unit] = split_scaled(text, "rate");
  if (unit.size() >= 2 && unit.substr(unit.size() - 2) == "/s") {
    unit = unit.substr(0, unit.size() - 2);
  }
  if (unit == "bit") return v;
  if (unit == "kbit") return v * 1'000;
  if (unit == "Mbit") return v * 1'000'000;
  if (unit == "Gbit") return v * 1'000'000'000;
  throw std::invalid_argument("rate: unknown unit '" + unit +
                              "' (use bit/kbit/Mbit/Gbit)");
}

std::uint64_t parse_bytes(const std::string& text) {
  const auto [v, unit] = split_scaled(text, "bytes");
  if (unit == "B") return v;
  if (unit == "KB") return v * 1'000;
  if (unit == "MB") return v * 1'000'000;
  if (unit == "GB") return v * 1'000'000'000;
  throw std::invalid_argument("bytes: unknown unit '" + unit + "' (use B/KB/MB/GB)");
}

namespace {

FlowSpec parse_flow(const std::string& value, std::size_t line_no) {
  const auto fail = [line_no](const std::string& msg) {
    throw std::invalid_argument("scenario config: line " +
                                std::to_string(line_no) + ": " + msg);
  };
  std::istringstream in(value);
  std::string kind;
  in >> kind;
  FlowSpec f;
  if (kind == "tcp") {
    f.kind = FlowKind::Tcp;
  } else if (kind == "udp") {
    f.kind = FlowKind::UdpCbr;
  } else {
    fail("flow kind must be tcp or udp, got '" + kind + "'");
  }
  std::string tok;
  bool have_rate = false;
  while (in >> tok) {
    const std::size_t eq = tok.find('=');
    if (eq == std::string::npos) fail("flow option '" + tok + "' is not key=value");
    const std::string key = tok.substr(0, eq);
    const std::string val = tok.substr(eq + 1);
    if (key == "rate") {
      f.rate_bps = parse_rate(val);
      have_rate = true;
    } else if (key == "size") {
      f.packet_size = static_cast<std::uint32_t>(parse_bytes(val));
    } else if (key == "start") {
      f.start = sim_epoch + parse_duration(val);
    } else if (key == "stop") {
      f.stop = sim_epoch + parse_duration(val);
    } else if (key == "link") {
      f.link_latency = parse_duration(val);
    } else {
      fail("unknown flow option '" + key + "'");
    }
  }
  if (f.kind == FlowKind::Tcp && have_rate) {
    fail("tcp flows are ack-clocked and take no rate");
  }
  if (f.kind == FlowKind::Tcp && f.stop) {
    fail("tcp flows run for the whole scenario and take no stop");
  }
  if (f.kind == FlowKind::UdpCbr && !have_rate) fail("udp flows require rate=");
  return f;
}

}  // namespace

void ScenarioConfig::validate() const {
  const auto fail = [](const std::string& msg) {
    throw std::invalid_argument("scenario config: " + msg);
  };
  if (flows.empty()) fail("at least one flow is required");
  if (duration <= Duration{}) fail("duration must be positive");
  if (drain_rate_bps == 0) fail("drain_rate must be positive");
  if (buffer_bytes < 9000) fail("buffer must hold at least one packet");
  if (fq_queues == 0) fail("fq_queues must be positive");
  if (if3_enabled && variant != AqmVariant::ReferenceCodel) {
    fail("if3 applies to the reference_codel variant only");
  }
  if (variant != AqmVariant::NoAqm) {
    CodelConfig codel;
    codel.target = target;
    codel.interval = interval;
    codel.sqrt_mode = sqrt_mode;
    codel.occupancy_unit = occupancy_unit;
    codel.validate();
  }
  for (std::size_t i = 0; i < flows.size(); ++i) {
    const FlowSpec& f = flows[i];
    const auto ffail = [&](const std::string& msg) {
      fail("flow " + std::to_string(i) + ": " + msg);
    };
    if (f.start < sim_epoch) ffail("start must be >= 0");
    if (f.start >= sim_epoch + duration) ffail("start is past the scenario end");
    if (f.link_latency < Duration{}) ffail("link latency must be >= 0");
    if (f.kind == FlowKind::UdpCbr) {
      if (f.rate_bps == 0) ffail("rate must be positive");
      if (f.packet_size < 64 || f.packet_size > 9000) {
        ffail("packet size outside [64, 9000]");
      }
      if (f.stop && *f.stop <= f.start) ffail("stop must be after start");
    }
  }
}

ScenarioConfig parse_scenario(const std::string& text) {
  ScenarioConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto fail = [line_no](const std::string& msg) {
      throw std::invalid_argument("scenario config: line " +
                                  std::to_string(line_no) + ": " + msg);
    };
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) fail("expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (value.empty()) fail("key '" + key + "' has no value");

    try {
      if (key == "name") {
        cfg.name = value;
      } else if (key == "variant") {
        if (value == "reference_codel") cfg.variant = AqmVariant::ReferenceCodel;
        else if (value == "pipeline_codel") cfg.variant = AqmVariant::PipelineCodel;
        else if (value == "no_aqm") cfg.variant = AqmVariant::NoAqm;
        else fail("variant must be reference_codel, pipeline_codel, or no_aqm");
      } else if (key == "sqrt_mode") {
        if (value == "exact") cfg.sqrt_mode = SqrtMode::Exact;
        else if (value == "lut_lz") cfg.sqrt_mode = SqrtMode::LutLz;
        else fail("sqrt_mode must be exact or lut_lz");
      } else if (key == "if3") {
        if (value == "on") cfg.if3_enabled = true;
        else if (value == "off") cfg.if3_enabled = false;
        else fail("if3 must be on or off");
      } else if (key == "attach") {
        if (value == "egress") cfg.attach = AttachPoint::Egress;
        else if (value == "ingress") cfg.attach = AttachPoint::Ingress;
        else fail("attach must be egress or ingress");
      } else if (key == "occupancy_unit") {
        if (value == "bytes") cfg.occupancy_unit = OccupancyUnit::Bytes;
        else if (value == "packets") cfg.occupancy_unit = OccupancyUnit::Packets;
        else fail("occupancy_unit must be bytes or packets");
      } else if (key == "fq_queues") {
        cfg.fq_queues = static_cast<std::uint32_t>(parse_u64(value, "fq_queues"));
      } else if (key == "drain_rate") {
        cfg.drain_rate_bps = parse_rate(value);
      } else if (key == "buffer") {
        cfg.buffer_bytes = parse_bytes(value);
      } else if (key == "target") {
        cfg.target = parse_duration(value);
      } else if (key == "interval") {
        cfg.interval = parse_duration(value);
      } else if (key == "duration") {
        cfg.duration = parse_duration(value);
      } else if (key == "seed") {
        cfg.seed = parse_u64(value, "seed");
      } else if (key == "csv_out") {
        cfg.csv_out = value;
      } else if (key == "summary_out") {
        cfg.summary_out = value;
      } else if (key == "flow") {
        cfg.flows.push_back(parse_flow(value, line_no));
      } else {
        fail("unknown key '" + key + "'");
      }
    } catch (const std::invalid_argument& e) {
      const std::string msg(e.what());
      if (msg.rfind("scenario config:", 0) == 0) throw;
      fail(msg);
    }
  }
  cfg.validate();
  return cfg;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("scenario config: cannot open '" + path + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

namespace {

struct TcpEndpoints {
  std::unique_ptr<TcpSender> sender;
  std::unique_ptr<TcpReceiver> receiver;
};

}  // namespace

ScenarioResult run_scenario(const ScenarioConfig& config) {
  config.validate();
  log_info("run '" + config.name + "': seed=" + std::to_string(config.seed) +
           " flows=" + std::to_string(config.flows.size()));

  CodelConfig codel;
  codel.target = config.target;
  codel.interval = config.interval;
  codel.sqrt_mode = config.sqrt_mode;
  codel.occupancy_unit = config.occupancy_unit;
  codel.if3_enabled = config.if3_enabled.value_or(true);

  std::unique_ptr<Aqm> aqm;
  switch (config.variant) {
    case AqmVariant::ReferenceCodel:
      aqm = std::make_unique<ReferenceCodelAqm>(codel, config.fq_queues);
      break;
    case AqmVariant::PipelineCodel:
      aqm = std::make_unique<PipelineCodelAqm>(codel, config.fq_queues);
      break;
    case AqmVariant::NoAqm:
      aqm = std::make_unique<NoAqm>();
      break;
  }

  EventQueue ev;
  Stamper st;
  DutConfig dcfg;
  dcfg.capacity_bytes = config.buffer_bytes;
  dcfg.drain_rate_bps = config.drain_rate_bps;
  dcfg.fq_queues = config.fq_queues;
  dcfg.attach = config.attach;
  Dut dut(dcfg, ev, st, std::move(aqm));

  PacketIdGen ids;
  std::mt19937_64 rng(config.seed);
  const SimTime t_end = sim_epoch + config.duration;

  std::vector<std::unique_ptr<TcpEndpoints>> tcp(config.flows.size());
  std::vector<std::unique_ptr<UdpCbrSource>> udp(config.flows.size());

  for (std::uint32_t i = 0; i < config.flows.size(); ++i) {
    const FlowSpec& f = config.flows[i];
    const Duration link = f.link_latency;
    const auto emit = [&ev, &dut, link](const Packet& p) {
      ev.schedule(ev.now() + link, [&dut, p] { dut.arrive(p); });
    };
    if (f.kind == FlowKind::Tcp) {
      // the seed decorrelates competing flows via a small start jitter
      const Duration jitter = ns(static_cast<std::int64_t>(rng() % 5'000'000));
      auto ep = std::make_unique<TcpEndpoints>();
      TcpEndpoints* raw = ep.get();
      ep->sender = std::make_unique<TcpSender>(ev, TcpConfig{}, i, ids, emit);
      ep->receiver = std::make_unique<TcpReceiver>(
          [&ev, raw, link](std::uint64_t ack, SimTime now) {
            ev.schedule(now + link,
                        [raw, &ev, ack] { raw->sender->on_ack(ack, ev.now()); });
          });
      ev.schedule(f.start + jitter, [raw] { raw->sender->start(); });
      tcp[i] = std::move(ep);
    } else {
      UdpCbrConfig ucfg;
      ucfg.rate_bps = f.rate_bps;
      ucfg.packet_size = f.packet_size;
      ucfg.start = f.start;
      ucfg.stop = f.stop.value_or(t_end);
      udp[i] = std::make_unique<UdpCbrSource>(ev, ucfg, i, ids, emit);
      udp[i]->start();
    }
  }

  dut.set_deliver_handler([&tcp](const Packet& p, SimTime now) {
    if (p.flow_id < tcp.size() && tcp[p.flow_id]) {
      tcp[p.flow_id]->receiver->on_data(p, now);
    }
  });

  ev.run_until(t_end);

  ScenarioResult result;
  result.rows = rows_from_records(st.records());
  result.summary = summarize_rows(result.rows);
  return result;
}

std::vector<SweepPoint> rate_sweep(const ScenarioConfig& config,
                                   const std::vector<std::uint64_t>& rates_bps) {
  config.validate();
  for (const FlowSpec& f : config.flows) {
    if (f.kind != FlowKind::UdpCbr) {
      throw std::invalid_argument("rate sweep: config must contain UDP flows only");
    }
  }
  if (rates_bps.empty()) {
    throw std::invalid_argument("rate sweep: at least one rate is required");
  }
  std::vector<SweepPoint> points;
  for (const std::uint64_t rate : rates_bps) {
    if (rate == 0) throw std::invalid_argument("rate sweep: rate must be positive");
    ScenarioConfig step = config;
    for (FlowSpec& f : step.flows) f.rate_bps = rate;
    const ScenarioResult r = run_scenario(step);
    SweepPoint p;
    p.rate_bps = rate;
    p.mean_latency_ms =
        r.summary.aggregate.latency ? r.summary.aggregate.latency->mean_ms : 0.0;
    p.loss_pct = r.summary.aggregate.loss_pct;
    p.delivered = r.summary.aggregate.delivered;
    points.push_back(p);
    log_info("sweep rate=" + std::to_string(rate) +
             " mean_ms=" + std::to_string(p.mean_latency_ms));
  }
  return points;
}

std::string format_sweep(const std::vector<SweepPoint>& points) {
  std::string out{kSweepCsvHeader};
  out += '\n';
  char buf[128];
  for (const SweepPoint& p : points) {
    std::snprintf(buf, sizeof buf, "%llu,%.3f,%.3f,%llu\n",
                  static_cast<unsigned long long>(p.rate_bps), p.mean_latency_ms,
                  p.loss_pct, static_cast<unsigned long long>(p.delivered));
    out += buf;
  }
  return out;
}

}  // namespace codelsim
