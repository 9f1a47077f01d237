#pragma once

#include "ffc/error.hpp"
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ffc {

using NodeId = std::uint32_t;
constexpr NodeId kNoNode = 0xFFFFFFFFu;

enum class NodeKind : std::uint8_t { FlipFlop, Gate, PrimaryInput, PrimaryOutput, Constant };

enum class GateFn : std::uint8_t { And, Or, Not, Xor, Nand, Nor, Xnor, Mux2, Buf };

// Number of input pins the gate function expects.
int gate_arity(GateFn fn);
std::string_view gate_fn_name(GateFn fn);
std::optional<GateFn> gate_fn_from_name(std::string_view name);

struct BusRef {
  std::string name;
  std::uint32_t index = 0;
};

// One circuit node. A node's name is also the name of the signal it drives;
// fanin holds the driver of each input pin in pin order (FF: {D}, PO:
// {driver}, gate: pins; MUX2 pin order is {sel, a, b} meaning sel ? b : a).
struct Node {
  NodeId id = kNoNode;
  NodeKind kind = NodeKind::Gate;
  GateFn fn = GateFn::Buf;
  std::string name;
  std::vector<NodeId> fanin;
  std::vector<std::string> module_path;  // FFs only
  std::optional<BusRef> bus;             // FFs only
  int reset_value = 0;                   // FFs only
  int const_value = 0;                   // Constants only
};

struct Diagnostic {
  std::string code;  // "multiple-drivers", "missing-driver", "combinational-cycle", ...
  std::string message;
};

// Gate-level synchronous circuit. Immutable once finalize() has run; the
// derived members below are filled in by finalize().
struct CircuitGraph {
  std::string name;
  std::vector<Node> nodes;  // node id == index

  // Derived (finalize):
  std::vector<std::vector<NodeId>> fanout;      // driver -> sinks, ascending
  std::vector<NodeId> topo_gates;               // evaluation order (consts first)
  std::vector<NodeId> ffs, pis, pos;            // declaration order
  std::unordered_map<std::string, NodeId> by_name;

  const Node& node(NodeId id) const { return nodes.at(id); }
  NodeId id_of(std::string_view name) const;
  std::size_t ff_count() const { return ffs.size(); }

  // Validates all graph invariants and computes the derived members.
  // Throws NetlistError listing the diagnostics if any invariant fails.
  void finalize();
};

class NetlistError : public Error {
 public:
  using Error::Error;
};

// Structural invariant checks; empty result means the graph is well formed.
// Works on nodes/fanin only, so programmatically built (possibly broken)
// graphs can be checked before finalize().
std::vector<Diagnostic> validate(const CircuitGraph& c);

// JSON netlist front end.
CircuitGraph parse_netlist(const std::string& text);
std::string serialize_netlist(const CircuitGraph& c);

CircuitGraph load_netlist_file(const std::string& path);

// FF dependency graph: vertices are FFs, PIs and POs of the circuit; an edge
// u -> v means a purely combinational path runs from u's output to an input
// of v. Adjacency is indexed by circuit NodeId and sorted ascending.
struct FFDependencyGraph {
  const CircuitGraph* circuit = nullptr;
  std::vector<std::vector<NodeId>> succ;
  std::vector<std::vector<NodeId>> pred;

  bool is_vertex(NodeId id) const;
};

FFDependencyGraph derive_ff_graph(const CircuitGraph& c);

}  // namespace ffc
