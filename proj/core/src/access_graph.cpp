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

#include "codelsim/access_graph.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

namespace codelsim {

namespace {

[[noreturn]] void parse_fail(int line, const std::string& what) {
  throw std::invalid_argument("program parse: line " + std::to_string(line) +
                              ": " + what);
}

unsigned parse_number(const std::string& text, int line, const std::string& key) {
  unsigned long v = 0;
  std::size_t used = 0;
  try {
    v = std::stoul(text, &used);
  } catch (const std::exception&) {
    parse_fail(line, key + " expects a number, got '" + text + "'");
  }
  if (used != text.size())
    parse_fail(line, key + " expects a number, got '" + text + "'");
  return static_cast<unsigned>(v);
}

std::vector<std::string> parse_list(const std::string& text, int line,
                                    const std::string& key) {
  if (text.size() < 2 || text.front() != '[' || text.back() != ']')
    parse_fail(line, key + " expects a [a,b,...] list, got '" + text + "'");
  std::vector<std::string> items;
  std::string body = text.substr(1, text.size() - 2);
  if (body.empty()) return items;
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) parse_fail(line, key + " has an empty list element");
    items.push_back(item);
  }
  return items;
}

// Union-find over variable indices.
struct UnionFind {
  std::vector<std::size_t> parent;

  explicit UnionFind(std::size_t n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

std::vector<std::size_t> touched_variables(const AccessGraph::Op& op) {
  std::vector<std::size_t> vars = op.reads;
  vars.insert(vars.end(), op.writes.begin(), op.writes.end());
  std::sort(vars.begin(), vars.end());
  vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
  return vars;
}

std::string join_names(const std::vector<std::string>& names) {
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i) out += ", ";
    out += names[i];
  }
  return out;
}

}  // namespace

ProgramDescription parse_program(std::string_view text) {
  ProgramDescription desc;
  std::set<std::string> reg_names, op_names;
  int line_no = 0;
  std::stringstream lines{std::string(text)};
  std::string line;
  while (std::getline(lines, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos)
      line.resize(hash);
    std::stringstream tokens(line);
    std::string head;
    if (!(tokens >> head)) continue;  // blank line

    std::string name;
    if (!(tokens >> name) || name.find('=') != std::string::npos)
      parse_fail(line_no, "'" + head + "' needs a name");

    std::map<std::string, std::string> kv;
    std::string token;
    while (tokens >> token) {
      const auto eq = token.find('=');
      if (eq == std::string::npos || eq == 0)
        parse_fail(line_no, "expected key=value, got '" + token + "'");
      const std::string key = token.substr(0, eq);
      if (!kv.emplace(key, token.substr(eq + 1)).second)
        parse_fail(line_no, "duplicate key '" + key + "'");
    }

    auto take = [&](const char* key) -> std::optional<std::string> {
      auto it = kv.find(key);
      if (it == kv.end()) return std::nullopt;
      std::string v = it->second;
      kv.erase(it);
      return v;
    };

    if (head == "reg") {
      if (!reg_names.insert(name).second)
        parse_fail(line_no, "duplicate register '" + name + "'");
      ProgramDescription::Register reg;
      reg.name = name;
      if (const auto w = take("width")) {
        reg.width = parse_number(*w, line_no, "width");
        if (reg.width == 0 || reg.width > 64)
          parse_fail(line_no, "width must be 1..64");
      }
      if (const auto s = take("size")) {
        reg.array_size = parse_number(*s, line_no, "size");
        if (reg.array_size == 0) parse_fail(line_no, "size must be >= 1");
      }
      if (!kv.empty()) parse_fail(line_no, "unknown key '" + kv.begin()->first + "'");
      desc.registers.push_back(std::move(reg));
    } else if (head == "op") {
      if (!op_names.insert(name).second)
        parse_fail(line_no, "duplicate op '" + name + "'");
      ProgramDescription::Op op;
      op.name = name;
      if (const auto s = take("stage"))
        op.stage_pin = parse_number(*s, line_no, "stage");
      if (const auto v = take("reads")) op.reads = parse_list(*v, line_no, "reads");
      if (const auto v = take("writes")) op.writes = parse_list(*v, line_no, "writes");
      if (const auto v = take("in")) op.in = parse_list(*v, line_no, "in");
      if (const auto v = take("out")) op.out = parse_list(*v, line_no, "out");
      if (!kv.empty()) parse_fail(line_no, "unknown key '" + kv.begin()->first + "'");
      desc.ops.push_back(std::move(op));
    } else {
      parse_fail(line_no, "expected 'reg' or 'op', got '" + head + "'");
    }
  }
  return desc;
}

ProgramDescription load_program(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw std::invalid_argument("cannot open program file: " + path);
  std::stringstream buffer;
  buffer << file.rdbuf();
  return parse_program(buffer.str());
}

AccessGraph build_access_graph(const ProgramDescription& description) {
  AccessGraph graph;
  std::map<std::string, std::size_t> var_index;
  for (const auto& reg : description.registers) {
    var_index[reg.name] = graph.variables.size();
    graph.variables.push_back(AccessGraph::Variable{reg.name, reg.array_size});
  }
  for (const auto& op : description.ops) {
    AccessGraph::Op node;
    node.name = op.name;
    node.stage_pin = op.stage_pin;
    node.in = op.in;
    node.out = op.out;
    auto resolve = [&](const std::string& name) {
      const auto it = var_index.find(name);
      if (it == var_index.end())
        throw std::invalid_argument("op " + op.name +
                                    ": unknown register '" + name + "'");
      return it->second;
    };
    for (const auto& r : op.reads) node.reads.push_back(resolve(r));
    for (const auto& w : op.writes) node.writes.push_back(resolve(w));
    graph.ops.push_back(std::move(node));
  }
  return graph;
}

std::vector<std::vector<std::string>> atomic_blocks(const AccessGraph& graph) {
  UnionFind uf(graph.variables.size());
  for (const auto& op : graph.ops) {
    const auto vars = touched_variables(op);
    for (std::size_t i = 1; i < vars.size(); ++i) uf.unite(vars[0], vars[i]);
  }
  std::map<std::size_t, std::vector<std::string>> by_root;
  for (std::size_t v = 0; v < graph.variables.size(); ++v)
    by_root[uf.find(v)].push_back(graph.variables[v].name);
  std::vector<std::vector<std::string>> blocks;
  for (auto& [root, names] : by_root) {
    std::sort(names.begin(), names.end());
    blocks.push_back(std::move(names));
  }
  std::sort(blocks.begin(), blocks.end());
  return blocks;
}

std::variant<StageMapping, MappingError> validate_feedforward(
    const AccessGraph& graph, const MapperLimits& limits) {
  if (limits.alu_register_capacity == 0)
    throw std::invalid_argument("mapper: ALU register capacity must be >= 1");

  UnionFind uf(graph.variables.size());
  for (const auto& op : graph.ops) {
    const auto vars = touched_variables(op);
    for (std::size_t i = 1; i < vars.size(); ++i) uf.unite(vars[0], vars[i]);
  }

  // Capacity: every atomic block must fit one stateful ALU. An array still
  // counts as one register.
  {
    std::map<std::size_t, std::vector<std::string>> by_root;
    for (std::size_t v = 0; v < graph.variables.size(); ++v)
      by_root[uf.find(v)].push_back(graph.variables[v].name);
    std::vector<std::vector<std::string>> oversized;
    for (auto& [root, names] : by_root) {
      if (names.size() > limits.alu_register_capacity) {
        std::sort(names.begin(), names.end());
        oversized.push_back(std::move(names));
      }
    }
    if (!oversized.empty()) {
      std::sort(oversized.begin(), oversized.end());
      MappingError err;
      err.kind = MappingError::Kind::CapacityExceeded;
      err.variables = oversized.front();
      err.message = "atomic block {" + join_names(err.variables) + "} requires " +
                    std::to_string(err.variables.size()) +
                    " registers in one stateful ALU (capacity " +
                    std::to_string(limits.alu_register_capacity) + ")";
      return err;
    }
  }

  // Nodes: one per stateful block with at least one op, one per stateless
  // op. Every op maps to exactly one node (union-find guarantees all its
  // variables share a root).
  struct Node {
    std::vector<std::size_t> ops;
    std::vector<std::size_t> vars;
    bool stateful{false};
  };
  std::vector<Node> nodes;
  std::map<std::size_t, std::size_t> root_to_node;
  std::vector<std::size_t> op_node(graph.ops.size());
  for (std::size_t oi = 0; oi < graph.ops.size(); ++oi) {
    const auto vars = touched_variables(graph.ops[oi]);
    if (vars.empty()) {
      op_node[oi] = nodes.size();
      nodes.push_back(Node{{oi}, {}, false});
      continue;
    }
    const std::size_t root = uf.find(vars[0]);
    const auto it = root_to_node.find(root);
    if (it == root_to_node.end()) {
      root_to_node[root] = nodes.size();
      op_node[oi] = nodes.size();
      nodes.push_back(Node{{oi}, {}, true});
    } else {
      op_node[oi] = it->second;
      nodes[it->second].ops.push_back(oi);
    }
  }
  for (std::size_t v = 0; v < graph.variables.size(); ++v) {
    const auto it = root_to_node.find(uf.find(v));
    if (it != root_to_node.end()) nodes[it->second].vars.push_back(v);
  }

  // Per-node stage pins; two ops of one block pinned apart is a conflict.
  std::vector<std::optional<unsigned>> node_pin(nodes.size());
  for (std::size_t ni = 0; ni < nodes.size(); ++ni) {
    for (const std::size_t oi : nodes[ni].ops) {
      const auto& pin = graph.ops[oi].stage_pin;
      if (!pin) continue;
      if (node_pin[ni] && *node_pin[ni] != *pin) {
        MappingError err;
        err.kind = MappingError::Kind::PinConflict;
        for (const std::size_t v : nodes[ni].vars)
          err.variables.push_back(graph.variables[v].name);
        std::sort(err.variables.begin(), err.variables.end());
        err.message = "ops of one atomic block are pinned to different stages (" +
                      std::to_string(*node_pin[ni]) + " and " +
                      std::to_string(*pin) + ")";
        return err;
      }
      node_pin[ni] = *pin;
    }
  }

  // Value edges out -> in, lifted to nodes.
  std::map<std::string, std::vector<std::size_t>> producers;
  for (std::size_t oi = 0; oi < graph.ops.size(); ++oi)
    for (const auto& name : graph.ops[oi].out)
      producers[name].push_back(op_node[oi]);
  std::vector<std::set<std::size_t>> succ(nodes.size());
  std::vector<std::size_t> indegree(nodes.size(), 0);
  for (std::size_t oi = 0; oi < graph.ops.size(); ++oi) {
    for (const auto& name : graph.ops[oi].in) {
      const auto it = producers.find(name);
      if (it == producers.end()) continue;  // external input
      for (const std::size_t from : it->second) {
        const std::size_t to = op_node[oi];
        if (from == to) continue;
        if (succ[from].insert(to).second) ++indegree[to];
      }
    }
  }

  // Kahn's algorithm; the ready set is ordered by node id so placement is
  // deterministic and follows declaration order among independent ops.
  std::set<std::size_t> ready;
  for (std::size_t ni = 0; ni < nodes.size(); ++ni)
    if (indegree[ni] == 0) ready.insert(ni);

  std::vector<unsigned> stage(nodes.size(), 0);
  std::set<unsigned> stateful_stages;
  std::size_t placed = 0;
  unsigned max_stage = 0;
  while (!ready.empty()) {
    const std::size_t ni = *ready.begin();
    ready.erase(ready.begin());
    ++placed;

    unsigned base = 0;
    for (std::size_t from = 0; from < nodes.size(); ++from)
      if (succ[from].count(ni)) base = std::max(base, stage[from] + 1);

    if (node_pin[ni]) {
      if (*node_pin[ni] < base) {
        MappingError err;
        err.kind = MappingError::Kind::PinConflict;
        for (const std::size_t v : nodes[ni].vars)
          err.variables.push_back(graph.variables[v].name);
        std::sort(err.variables.begin(), err.variables.end());
        err.message = "op " + graph.ops[nodes[ni].ops.front()].name +
                      " is pinned to stage " + std::to_string(*node_pin[ni]) +
                      " but its dependencies need stage " + std::to_string(base) +
                      " or later";
        return err;
      }
      base = *node_pin[ni];
      if (nodes[ni].stateful && stateful_stages.count(base)) {
        MappingError err;
        err.kind = MappingError::Kind::PinConflict;
        for (const std::size_t v : nodes[ni].vars)
          err.variables.push_back(graph.variables[v].name);
        std::sort(err.variables.begin(), err.variables.end());
        err.message = "op " + graph.ops[nodes[ni].ops.front()].name +
                      " is pinned to stage " + std::to_string(base) +
                      " which already holds a stateful ALU";
        return err;
      }
    } else if (nodes[ni].stateful) {
      while (stateful_stages.count(base)) ++base;
    }

    stage[ni] = base;
    if (nodes[ni].stateful) stateful_stages.insert(base);
    max_stage = std::max(max_stage, base);

    for (const std::size_t to : succ[ni])
      if (--indegree[to] == 0) ready.insert(to);
  }

  if (placed != nodes.size()) {
    MappingError err;
    err.kind = MappingError::Kind::CyclicDependency;
    std::vector<std::string> op_names;
    std::set<std::string> vars;
    for (std::size_t ni = 0; ni < nodes.size(); ++ni) {
      if (indegree[ni] == 0) continue;
      for (const std::size_t oi : nodes[ni].ops) op_names.push_back(graph.ops[oi].name);
      for (const std::size_t v : nodes[ni].vars) vars.insert(graph.variables[v].name);
    }
    std::sort(op_names.begin(), op_names.end());
    err.variables.assign(vars.begin(), vars.end());
    err.message = "value dependencies between ops {" + join_names(op_names) +
                  "} form a cycle; only backward-free programs fit the pipeline";
    return err;
  }

  StageMapping mapping;
  mapping.stage_count = nodes.empty() ? 0 : max_stage + 1;
  if (mapping.stage_count > limits.max_stages) {
    MappingError err;
    err.kind = MappingError::Kind::TooManyStages;
    err.message = "program needs " + std::to_string(mapping.stage_count) +
                  " stages, pipeline depth is " + std::to_string(limits.max_stages);
    return err;
  }
  for (std::size_t oi = 0; oi < graph.ops.size(); ++oi)
    mapping.placements.push_back(
        StageMapping::Placement{graph.ops[oi].name, stage[op_node[oi]]});
  return mapping;
}

std::variant<StageMapping, MappingError> validate_feedforward(
    const AccessGraph& graph, unsigned alu_register_capacity) {
  MapperLimits limits;
  limits.alu_register_capacity = alu_register_capacity;
  return validate_feedforward(graph, limits);
}

std::string format_mapping(const StageMapping& mapping) {
  std::string out = "stages: " + std::to_string(mapping.stage_count) + "\n";
  for (const auto& p : mapping.placements)
    out += "stage " + std::to_string(p.stage) + ": " + p.op + "\n";
  return out;
}

std::string format_mapping_error(const MappingError& error) {
  const char* kind = "";
  switch (error.kind) {
    case MappingError::Kind::CapacityExceeded: kind = "CapacityExceeded"; break;
    case MappingError::Kind::CyclicDependency: kind = "CyclicDependency"; break;
    case MappingError::Kind::TooManyStages: kind = "TooManyStages"; break;
    case MappingError::Kind::PinConflict: kind = "PinConflict"; break;
  }
  return std::string(kind) + ": " + error.message + "\n";
}

}  // namespace codelsim
