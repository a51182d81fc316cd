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
#include <variant>
#include <vector>

// Static mappability analysis: given a description of which stateful
// variables each operation reads and writes, decide whether the program
// fits a feed-forward pipeline whose stateful ALUs each touch at most a
// fixed number of registers, and assign stages if so.
namespace codelsim {

// Source-level description of a program, either built in code or parsed
// from the textual format:
//
//   # comment
//   reg <name> [width=<bits>] [size=<cells>]
//   op <name> [stage=<n>] [reads=[a,b]] [writes=[a]] [in=[x,y]] [out=[z]]
//
// reads/writes name registers; in/out name metadata values that flow
// between ops (these two namespaces are independent). Lists must not
// contain spaces. A register array (size > 1) still counts as a single
// register towards ALU capacity.
struct ProgramDescription {
  struct Register {
    std::string name;
    unsigned width{32};
    std::uint32_t array_size{1};
  };
  struct Op {
    std::string name;
    std::optional<unsigned> stage_pin;
    std::vector<std::string> reads;
    std::vector<std::string> writes;
    std::vector<std::string> in;
    std::vector<std::string> out;
  };
  std::vector<Register> registers;
  std::vector<Op> ops;
};

// Throws std::invalid_argument with a line number on malformed input.
ProgramDescription parse_program(std::string_view text);
ProgramDescription load_program(const std::string& path);

// Bipartite access graph: one node per op and per stateful variable, one
// edge per access (r: variable->op, w: op->variable), plus the op-to-op
// value edges implied by matching out/in names.
struct AccessGraph {
  struct Variable {
    std::string name;
    std::uint32_t array_size{1};
  };
  struct Op {
    std::string name;
    std::optional<unsigned> stage_pin;
    std::vector<std::size_t> reads;   // variable indices
    std::vector<std::size_t> writes;  // variable indices
    std::vector<std::string> in;
    std::vector<std::string> out;
  };
  std::vector<Variable> variables;
  std::vector<Op> ops;
};

// Throws std::invalid_argument when an op references an undeclared
// register.
AccessGraph build_access_graph(const ProgramDescription& description);

// Minimal clusters of stateful variables such that every op touches
// variables of at most one cluster. Untouched variables form singletons.
// Clusters are sorted by name for stable output.
std::vector<std::vector<std::string>> atomic_blocks(const AccessGraph& graph);

struct StageMapping {
  struct Placement {
    std::string op;
    unsigned stage;  // zero-based
  };
  std::vector<Placement> placements;  // in op declaration order
  unsigned stage_count{0};
};

struct MappingError {
  enum class Kind { CapacityExceeded, CyclicDependency, TooManyStages, PinConflict };
  Kind kind{Kind::CapacityExceeded};
  std::vector<std::string> variables;  // members of the offending cluster(s)
  std::string message;
};

struct MapperLimits {
  unsigned alu_register_capacity{2};
  unsigned max_stages{12};
};

// Assigns every op to a stage so that each atomic block occupies exactly
// one stage, at most one block sits in any stage, and every value edge
// goes to a strictly later stage. Errors identify the violating cluster.
std::variant<StageMapping, MappingError> validate_feedforward(
    const AccessGraph& graph, const MapperLimits& limits);
std::variant<StageMapping, MappingError> validate_feedforward(
    const AccessGraph& graph, unsigned alu_register_capacity);

// Renders a mapping or error the way the `check` subcommand prints it.
std::string format_mapping(const StageMapping& mapping);
std::string format_mapping_error(const MappingError& error);

}  // namespace codelsim
