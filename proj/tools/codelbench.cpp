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

// codelbench: runs AQM scenarios, sweeps offered load, checks program
// mappability, and recomputes summaries from emitted CSVs.
//
// Exit codes: 0 success, 1 validation or input error, 2 program does not
// map onto the pipeline.

#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "CLI11.hpp"
#include "codelsim/access_graph.hpp"
#include "codelsim/scenario.hpp"
#include "codelsim/summary.hpp"

namespace {

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot write '" + path + "'");
  out << text;
  if (!out) throw std::invalid_argument("write to '" + path + "' failed");
}

int cmd_run(const std::string& config_path, const std::string& csv_path,
            const std::string& summary_path,
            const std::optional<std::uint64_t>& seed) {
  codelsim::ScenarioConfig cfg = codelsim::load_scenario(config_path);
  if (seed) cfg.seed = *seed;
  if (!csv_path.empty()) cfg.csv_out = csv_path;
  if (!summary_path.empty()) cfg.summary_out = summary_path;

  const codelsim::ScenarioResult result = codelsim::run_scenario(cfg);
  const std::string text = codelsim::format_summary(result.summary);

  if (!cfg.csv_out.empty()) {
    std::ofstream out(cfg.csv_out, std::ios::binary);
    if (!out) throw std::invalid_argument("cannot write '" + cfg.csv_out + "'");
    codelsim::write_csv(out, result.rows);
    if (!out) throw std::invalid_argument("write to '" + cfg.csv_out + "' failed");
  }
  if (!cfg.summary_out.empty()) write_text_file(cfg.summary_out, text);

  std::fputs(text.c_str(), stdout);
  return 0;
}

int cmd_sweep(const std::string& config_path,
              const std::vector<std::string>& rate_texts,
              const std::string& out_path) {
  const codelsim::ScenarioConfig cfg = codelsim::load_scenario(config_path);
  std::vector<std::uint64_t> rates;
  rates.reserve(rate_texts.size());
  for (const std::string& text : rate_texts) {
    rates.push_back(codelsim::parse_rate(text));
  }
  const std::vector<codelsim::SweepPoint> points = codelsim::rate_sweep(cfg, rates);
  const std::string text = codelsim::format_sweep(points);
  if (!out_path.empty()) write_text_file(out_path, text);
  std::fputs(text.c_str(), stdout);
  return 0;
}

int cmd_check(const std::string& program_path, unsigned capacity,
              unsigned max_stages) {
  const codelsim::ProgramDescription desc = codelsim::load_program(program_path);
  const codelsim::AccessGraph graph = codelsim::build_access_graph(desc);
  codelsim::MapperLimits limits;
  limits.alu_register_capacity = capacity;
  limits.max_stages = max_stages;
  const auto verdict = codelsim::validate_feedforward(graph, limits);
  if (const auto* mapping = std::get_if<codelsim::StageMapping>(&verdict)) {
    std::fputs(codelsim::format_mapping(*mapping).c_str(), stdout);
    return 0;
  }
  const auto& error = std::get<codelsim::MappingError>(verdict);
  std::fputs(codelsim::format_mapping_error(error).c_str(), stdout);
  return 2;
}

int cmd_summarize(const std::string& csv_path) {
  std::ifstream in(csv_path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open '" + csv_path + "'");
  const std::vector<codelsim::CsvRow> rows = codelsim::parse_csv(in);
  const codelsim::RunSummary summary = codelsim::summarize_rows(rows);
  std::fputs(codelsim::format_summary(summary).c_str(), stdout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CoDel AQM scenario driver and pipeline mapper"};
  app.require_subcommand(1);

  std::string config_path;
  std::string csv_path;
  std::string summary_path;
  std::optional<std::uint64_t> seed;
  CLI::App* run = app.add_subcommand("run", "Run one scenario config");
  run->add_option("config", config_path, "scenario config file")->required();
  run->add_option("--csv", csv_path, "write per-packet CSV here");
  run->add_option("--summary", summary_path, "write the summary here");
  run->add_option("--seed", seed, "override the config seed");

  std::string sweep_config;
  std::vector<std::string> rate_texts;
  std::string sweep_out;
  CLI::App* sweep =
      app.add_subcommand("sweep", "Run a UDP config at several offered rates");
  sweep->add_option("config", sweep_config, "scenario config file")->required();
  sweep->add_option("--rates", rate_texts, "comma-separated rates, e.g. 90Mbit")
      ->required()
      ->delimiter(',');
  sweep->add_option("--out", sweep_out, "write the sweep CSV here");

  std::string program_path;
  unsigned capacity = 2;
  unsigned max_stages = 12;
  CLI::App* check =
      app.add_subcommand("check", "Map a program onto the feed-forward pipeline");
  check->add_option("program", program_path, "program description file")->required();
  check->add_option("--capacity", capacity, "registers per stateful ALU");
  check->add_option("--max-stages", max_stages, "pipeline stage budget");

  std::string summarize_csv;
  CLI::App* summarize =
      app.add_subcommand("summarize", "Recompute a summary from a per-packet CSV");
  summarize->add_option("csv", summarize_csv, "CSV written by run --csv")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (run->parsed()) return cmd_run(config_path, csv_path, summary_path, seed);
    if (sweep->parsed()) return cmd_sweep(sweep_config, rate_texts, sweep_out);
    if (check->parsed()) return cmd_check(program_path, capacity, max_stages);
    if (summarize->parsed()) return cmd_summarize(summarize_csv);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "codelbench: error: %s\n", e.what());
    return 1;
  }
  return 0;
}
