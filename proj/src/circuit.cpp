#include "ffc/circuit.hpp"

#include <algorithm>
#include <deque>
#include <sstream>

#include "ffc/io.hpp"
#include "json.hpp"

namespace ffc {

using nlohmann::json;

int gate_arity(GateFn fn) {
  switch (fn) {
    case GateFn::Not:
    case GateFn::Buf:
      return 1;
    case GateFn::Mux2:
      return 3;
    default:
      return 2;
  }
}

std::string_view gate_fn_name(GateFn fn) {
  switch (fn) {
    case GateFn::And: return "AND";
    case GateFn::Or: return "OR";
    case GateFn::Not: return "NOT";
    case GateFn::Xor: return "XOR";
    case GateFn::Nand: return "NAND";
    case GateFn::Nor: return "NOR";
    case GateFn::Xnor: return "XNOR";
    case GateFn::Mux2: return "MUX2";
    case GateFn::Buf: return "BUF";
  }
  return "?";
}

std::optional<GateFn> gate_fn_from_name(std::string_view name) {
  static const std::pair<std::string_view, GateFn> table[] = {
      {"AND", GateFn::And},   {"OR", GateFn::Or},     {"NOT", GateFn::Not},
      {"XOR", GateFn::Xor},   {"NAND", GateFn::Nand}, {"NOR", GateFn::Nor},
      {"XNOR", GateFn::Xnor}, {"MUX2", GateFn::Mux2}, {"BUF", GateFn::Buf},
  };
  for (const auto& [n, fn] : table)
    if (n == name) return fn;
  return std::nullopt;
}

NodeId CircuitGraph::id_of(std::string_view name) const {
  auto it = by_name.find(std::string(name));
  if (it == by_name.end()) throw NetlistError("unknown node name: '" + std::string(name) + "'");
  return it->second;
}

namespace {

bool bad_name(const std::string& n) {
  if (n.empty()) return true;
  for (char ch : n)
    if (ch == ',' || ch == '\n' || ch == '\r' || ch == '"') return true;
  return false;
}

}  // namespace

std::vector<Diagnostic> validate(const CircuitGraph& c) {
  std::vector<Diagnostic> diags;
  auto add = [&](std::string code, std::string msg) {
    diags.push_back({std::move(code), std::move(msg)});
  };

  const NodeId n = static_cast<NodeId>(c.nodes.size());
  for (NodeId i = 0; i < n; ++i) {
    if (c.nodes[i].id != i) {
      add("bad-id", "node '" + c.nodes[i].name + "' has id " + std::to_string(c.nodes[i].id) +
                        " but index " + std::to_string(i));
    }
  }

  // A node name is the signal it drives, so a duplicate name means two
  // drivers on one signal.
  {
    std::unordered_map<std::string, NodeId> seen;
    for (const Node& nd : c.nodes) {
      if (bad_name(nd.name)) {
        add("bad-name", "node id " + std::to_string(nd.id) + " has an empty or unusable name");
        continue;
      }
      auto [it, inserted] = seen.emplace(nd.name, nd.id);
      if (!inserted) add("multiple-drivers", "multiple drivers for signal '" + nd.name + "'");
    }
  }

  auto pin_ok = [&](NodeId target) { return target < n; };

  for (const Node& nd : c.nodes) {
    const std::string& nm = nd.name;
    switch (nd.kind) {
      case NodeKind::PrimaryInput:
        if (!nd.fanin.empty()) add("input-driven", "primary input '" + nm + "' has a driver");
        break;
      case NodeKind::Constant:
        if (!nd.fanin.empty()) add("input-driven", "constant '" + nm + "' has a driver");
        if (nd.const_value != 0 && nd.const_value != 1)
          add("bad-value", "constant '" + nm + "' value must be 0 or 1");
        break;
      case NodeKind::PrimaryOutput:
      case NodeKind::FlipFlop: {
        const char* what = nd.kind == NodeKind::FlipFlop ? "flip-flop" : "primary output";
        if (nd.fanin.size() != 1 || nd.fanin[0] == kNoNode) {
          add("missing-driver", std::string(what) + " '" + nm + "' has no driver");
        } else if (!pin_ok(nd.fanin[0])) {
          add("dangling-reference", std::string(what) + " '" + nm + "' references a missing node");
        }
        if (nd.kind == NodeKind::FlipFlop && nd.reset_value != 0 && nd.reset_value != 1)
          add("bad-value", "flip-flop '" + nm + "' reset value must be 0 or 1");
        break;
      }
      case NodeKind::Gate: {
        const int want = gate_arity(nd.fn);
        if (static_cast<int>(nd.fanin.size()) != want) {
          add("bad-arity", "gate '" + nm + "' (" + std::string(gate_fn_name(nd.fn)) + ") has " +
                               std::to_string(nd.fanin.size()) + " pins, expected " +
                               std::to_string(want));
        }
        for (std::size_t p = 0; p < nd.fanin.size(); ++p) {
          if (nd.fanin[p] == kNoNode)
            add("missing-driver", "gate '" + nm + "' pin " + std::to_string(p) + " has no driver");
          else if (!pin_ok(nd.fanin[p]))
            add("dangling-reference", "gate '" + nm + "' pin " + std::to_string(p) +
                                          " references a missing node");
        }
        break;
      }
    }
    for (NodeId drv : nd.fanin) {
      if (drv < n && c.nodes[drv].kind == NodeKind::PrimaryOutput)
        add("output-as-driver",
            "primary output '" + c.nodes[drv].name + "' drives node '" + nm + "'");
    }
  }

  // Bus (name, index) pairs unique among FFs.
  {
    std::unordered_map<std::string, NodeId> seen;
    for (const Node& nd : c.nodes) {
      if (nd.kind != NodeKind::FlipFlop || !nd.bus) continue;
      std::string key = nd.bus->name + "[" + std::to_string(nd.bus->index) + "]";
      auto [it, inserted] = seen.emplace(key, nd.id);
      if (!inserted)
        add("duplicate-bus-bit", "flip-flops '" + c.nodes[it->second].name + "' and '" + nd.name +
                                     "' both claim bus bit " + key);
    }
  }

  // Combinational acyclicity: Kahn over the gate-only subgraph. Edges into
  // FF D pins terminate at the FF, so cycles through FFs are fine.
  {
    std::vector<int> indeg(c.nodes.size(), 0);
    std::vector<std::vector<NodeId>> gate_fanout(c.nodes.size());
    for (const Node& nd : c.nodes) {
      if (nd.kind != NodeKind::Gate) continue;
      for (NodeId drv : nd.fanin) {
        if (drv < n && c.nodes[drv].kind == NodeKind::Gate) {
          ++indeg[nd.id];
          gate_fanout[drv].push_back(nd.id);
        }
      }
    }
    std::deque<NodeId> q;
    for (const Node& nd : c.nodes)
      if (nd.kind == NodeKind::Gate && indeg[nd.id] == 0) q.push_back(nd.id);
    std::size_t processed = 0, total_gates = 0;
    for (const Node& nd : c.nodes)
      if (nd.kind == NodeKind::Gate) ++total_gates;
    while (!q.empty()) {
      const NodeId u = q.front();
      q.pop_front();
      ++processed;
      for (NodeId s : gate_fanout[u])
        if (--indeg[s] == 0) q.push_back(s);
    }
    if (processed != total_gates) {
      std::string members;
      for (const Node& nd : c.nodes) {
        if (nd.kind == NodeKind::Gate && indeg[nd.id] > 0) {
          if (!members.empty()) members += ", ";
          members += "'" + nd.name + "'";
        }
      }
      add("combinational-cycle", "combinational cycle through " + members);
    }
  }

  return diags;
}

void CircuitGraph::finalize() {
  auto diags = validate(*this);
  if (!diags.empty()) {
    std::ostringstream msg;
    msg << "invalid circuit '" << name << "':";
    for (const auto& d : diags) msg << "\n  [" << d.code << "] " << d.message;
    throw NetlistError(msg.str());
  }

  by_name.clear();
  ffs.clear();
  pis.clear();
  pos.clear();
  for (const Node& nd : nodes) {
    by_name.emplace(nd.name, nd.id);
    if (nd.kind == NodeKind::FlipFlop) ffs.push_back(nd.id);
    if (nd.kind == NodeKind::PrimaryInput) pis.push_back(nd.id);
    if (nd.kind == NodeKind::PrimaryOutput) pos.push_back(nd.id);
  }

  fanout.assign(nodes.size(), {});
  for (const Node& nd : nodes)
    for (NodeId drv : nd.fanin) fanout[drv].push_back(nd.id);
  for (auto& v : fanout) std::sort(v.begin(), v.end());

  // Gate evaluation order: Kahn with a FIFO seeded in id order.
  topo_gates.clear();
  std::vector<int> indeg(nodes.size(), 0);
  for (const Node& nd : nodes) {
    if (nd.kind != NodeKind::Gate) continue;
    for (NodeId drv : nd.fanin)
      if (nodes[drv].kind == NodeKind::Gate) ++indeg[nd.id];
  }
  std::deque<NodeId> q;
  for (const Node& nd : nodes)
    if (nd.kind == NodeKind::Gate && indeg[nd.id] == 0) q.push_back(nd.id);
  while (!q.empty()) {
    const NodeId u = q.front();
    q.pop_front();
    topo_gates.push_back(u);
    for (NodeId s : fanout[u])
      if (nodes[s].kind == NodeKind::Gate && --indeg[s] == 0) q.push_back(s);
  }
}

namespace {

void syntax_error(const std::string& text, std::size_t byte, const std::string& what) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  throw NetlistError("syntax error at line " + std::to_string(line) + ", column " +
                     std::to_string(col) + ": " + what);
}

const json& field(const json& obj, const char* key, const char* ctx) {
  auto it = obj.find(key);
  if (it == obj.end())
    throw NetlistError(std::string("netlist: missing key '") + key + "' in " + ctx);
  return *it;
}

int bit_value(const json& j, const std::string& ctx) {
  if (!j.is_number_integer() || (j.get<int>() != 0 && j.get<int>() != 1))
    throw NetlistError("netlist: " + ctx + " must be 0 or 1");
  return j.get<int>();
}

}  // namespace

namespace {
CircuitGraph parse_netlist_doc(const json& doc);
}

CircuitGraph parse_netlist(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    syntax_error(text, e.byte, e.what());
  }
  try {
    return parse_netlist_doc(doc);
  } catch (const json::exception& e) {
    throw NetlistError(std::string("netlist: malformed document: ") + e.what());
  }
}

namespace {

CircuitGraph parse_netlist_doc(const json& doc) {
  if (!doc.is_object()) throw NetlistError("netlist: top level must be an object");

  CircuitGraph c;
  c.name = field(doc, "name", "netlist").get<std::string>();

  auto arr = [&](const char* key) -> json {
    auto it = doc.find(key);
    if (it == doc.end()) return json::array();
    if (!it->is_array()) throw NetlistError(std::string("netlist: '") + key + "' must be an array");
    return *it;
  };

  struct PendingRef {
    NodeId node;
    std::size_t pin;
    std::string target;
  };
  std::vector<PendingRef> refs;

  auto new_node = [&](NodeKind kind, std::string name) -> Node& {
    Node nd;
    nd.id = static_cast<NodeId>(c.nodes.size());
    nd.kind = kind;
    nd.name = std::move(name);
    c.nodes.push_back(std::move(nd));
    return c.nodes.back();
  };

  for (const json& j : arr("inputs")) {
    if (!j.is_string()) throw NetlistError("netlist: entries of 'inputs' must be strings");
    new_node(NodeKind::PrimaryInput, j.get<std::string>());
  }
  for (const json& j : arr("outputs")) {
    Node& nd = new_node(NodeKind::PrimaryOutput, field(j, "name", "output").get<std::string>());
    nd.fanin.assign(1, kNoNode);
    refs.push_back({nd.id, 0, field(j, "driver", "output").get<std::string>()});
  }
  for (const json& j : arr("ffs")) {
    Node& nd = new_node(NodeKind::FlipFlop, field(j, "name", "ff").get<std::string>());
    nd.fanin.assign(1, kNoNode);
    refs.push_back({nd.id, 0, field(j, "d", "ff").get<std::string>()});
    nd.reset_value = bit_value(field(j, "reset", "ff"), "ff '" + nd.name + "' reset");
    for (const json& m : field(j, "module", "ff")) nd.module_path.push_back(m.get<std::string>());
    const json& bus = field(j, "bus", "ff");
    if (!bus.is_null()) {
      BusRef b;
      b.name = field(bus, "name", "bus").get<std::string>();
      const json& idx = field(bus, "index", "bus");
      if (!idx.is_number_integer() || idx.get<long long>() < 0)
        throw NetlistError("netlist: bus index of ff '" + nd.name + "' must be a non-negative integer");
      b.index = idx.get<std::uint32_t>();
      nd.bus = std::move(b);
    }
  }
  for (const json& j : arr("gates")) {
    Node& nd = new_node(NodeKind::Gate, field(j, "name", "gate").get<std::string>());
    const std::string fn_name = field(j, "fn", "gate").get<std::string>();
    auto fn = gate_fn_from_name(fn_name);
    if (!fn) throw NetlistError("netlist: gate '" + nd.name + "' has unknown function '" + fn_name + "'");
    nd.fn = *fn;
    const json& pins = field(j, "pins", "gate");
    nd.fanin.assign(pins.size(), kNoNode);
    for (std::size_t p = 0; p < pins.size(); ++p)
      refs.push_back({nd.id, p, pins[p].get<std::string>()});
  }
  for (const json& j : arr("consts")) {
    Node& nd = new_node(NodeKind::Constant, field(j, "name", "const").get<std::string>());
    nd.const_value = bit_value(field(j, "value", "const"), "const '" + nd.name + "' value");
  }

  // Duplicate names are two drivers on one signal; catch before resolving.
  std::unordered_map<std::string, NodeId> by_name;
  for (const Node& nd : c.nodes) {
    auto [it, inserted] = by_name.emplace(nd.name, nd.id);
    if (!inserted) throw NetlistError("multiple drivers for signal '" + nd.name + "'");
  }
  for (const PendingRef& r : refs) {
    auto it = by_name.find(r.target);
    if (it == by_name.end())
      throw NetlistError("dangling reference: '" + r.target + "' referenced by node '" +
                         c.nodes[r.node].name + "'");
    c.nodes[r.node].fanin[r.pin] = it->second;
  }

  c.finalize();
  return c;
}

}  // namespace

std::string serialize_netlist(const CircuitGraph& c) {
  json doc;
  doc["name"] = c.name;
  json inputs = json::array(), outputs = json::array(), ffs = json::array(),
       gates = json::array(), consts = json::array();
  for (const Node& nd : c.nodes) {
    switch (nd.kind) {
      case NodeKind::PrimaryInput:
        inputs.push_back(nd.name);
        break;
      case NodeKind::PrimaryOutput:
        outputs.push_back({{"name", nd.name}, {"driver", c.nodes[nd.fanin[0]].name}});
        break;
      case NodeKind::FlipFlop: {
        json ff{{"name", nd.name},
                {"d", c.nodes[nd.fanin[0]].name},
                {"reset", nd.reset_value},
                {"module", nd.module_path}};
        ff["bus"] = nd.bus ? json{{"name", nd.bus->name}, {"index", nd.bus->index}}
                           : json(nullptr);
        ffs.push_back(std::move(ff));
        break;
      }
      case NodeKind::Gate: {
        json pins = json::array();
        for (NodeId drv : nd.fanin) pins.push_back(c.nodes[drv].name);
        gates.push_back({{"name", nd.name},
                         {"fn", std::string(gate_fn_name(nd.fn))},
                         {"pins", std::move(pins)}});
        break;
      }
      case NodeKind::Constant:
        consts.push_back({{"name", nd.name}, {"value", nd.const_value}});
        break;
    }
  }
  doc["inputs"] = std::move(inputs);
  doc["outputs"] = std::move(outputs);
  doc["ffs"] = std::move(ffs);
  doc["gates"] = std::move(gates);
  doc["consts"] = std::move(consts);
  return doc.dump(2) + "\n";
}

CircuitGraph load_netlist_file(const std::string& path) {
  return parse_netlist(slurp(path));
}

bool FFDependencyGraph::is_vertex(NodeId id) const {
  const NodeKind k = circuit->nodes[id].kind;
  return k == NodeKind::FlipFlop || k == NodeKind::PrimaryInput || k == NodeKind::PrimaryOutput;
}

FFDependencyGraph derive_ff_graph(const CircuitGraph& c) {
  FFDependencyGraph g;
  g.circuit = &c;
  g.succ.assign(c.nodes.size(), {});
  g.pred.assign(c.nodes.size(), {});

  std::vector<NodeId> sources;
  sources.insert(sources.end(), c.pis.begin(), c.pis.end());
  sources.insert(sources.end(), c.ffs.begin(), c.ffs.end());

  std::vector<std::uint8_t> seen_gate(c.nodes.size(), 0);
  std::vector<std::uint8_t> seen_sink(c.nodes.size(), 0);
  std::vector<NodeId> stack, touched_gates, sinks;

  for (NodeId u : sources) {
    stack.assign(c.fanout[u].begin(), c.fanout[u].end());
    touched_gates.clear();
    sinks.clear();
    while (!stack.empty()) {
      const NodeId v = stack.back();
      stack.pop_back();
      const Node& nd = c.nodes[v];
      if (nd.kind == NodeKind::Gate) {
        if (seen_gate[v]) continue;
        seen_gate[v] = 1;
        touched_gates.push_back(v);
        for (NodeId s : c.fanout[v]) stack.push_back(s);
      } else if (nd.kind == NodeKind::FlipFlop || nd.kind == NodeKind::PrimaryOutput) {
        if (!seen_sink[v]) {
          seen_sink[v] = 1;
          sinks.push_back(v);
        }
      }
    }
    std::sort(sinks.begin(), sinks.end());
    g.succ[u] = sinks;
    for (NodeId v : touched_gates) seen_gate[v] = 0;
    for (NodeId v : sinks) seen_sink[v] = 0;
  }

  for (NodeId u = 0; u < c.nodes.size(); ++u)
    for (NodeId v : g.succ[u]) g.pred[v].push_back(u);
  for (auto& v : g.pred) std::sort(v.begin(), v.end());
  return g;
}

}  // namespace ffc
