#pragma once

// Shared fixtures and brute-force oracles. The oracles recompute everything
// from raw adjacency with Floyd-Warshall closures and plain BFS loops so
// they stay independent of the library's per-node traversals.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ffc/circuit.hpp"
#include "ffc/cluster.hpp"
#include "ffc/evaluate.hpp"
#include "ffc/features.hpp"
#include "ffc/rng.hpp"
#include "ffc/trace.hpp"

namespace tutil {

using namespace ffc;

// ---- fixtures -------------------------------------------------------

// PI a; FF f(D=x); x = XOR(a, f.Q); PO y = f.Q
inline std::string one_ff_loop_netlist() {
  return R"({
  "name": "loop1",
  "inputs": ["a"],
  "outputs": [{"name": "y", "driver": "f"}],
  "ffs": [{"name": "f", "d": "x", "reset": 0, "module": ["top"], "bus": null}],
  "gates": [{"name": "x", "fn": "XOR", "pins": ["a", "f"]}],
  "consts": []
})";
}

inline std::string combinational_cycle_netlist() {
  return R"({
  "name": "badcycle",
  "inputs": ["a"],
  "outputs": [{"name": "y", "driver": "x"}],
  "ffs": [],
  "gates": [{"name": "x", "fn": "AND", "pins": ["x", "a"]}],
  "consts": []
})";
}

// PI din -> f1 -> f2 -> f3 -> PO dout
inline std::string shift3_netlist() {
  return R"({
  "name": "shift3",
  "inputs": ["din"],
  "outputs": [{"name": "dout", "driver": "f3"}],
  "ffs": [
    {"name": "f1", "d": "din", "reset": 0, "module": ["top"], "bus": null},
    {"name": "f2", "d": "f1", "reset": 0, "module": ["top"], "bus": null},
    {"name": "f3", "d": "f2", "reset": 0, "module": ["top"], "bus": null}
  ],
  "gates": [],
  "consts": []
})";
}

// Toggle FF: f.D = NOT(f.Q), observable at PO q.
inline std::string toggle_netlist() {
  return R"({
  "name": "toggle",
  "inputs": [],
  "outputs": [{"name": "q", "driver": "f"}],
  "ffs": [{"name": "f", "d": "n", "reset": 0, "module": ["top"], "bus": null}],
  "gates": [{"name": "n", "fn": "NOT", "pins": ["f"]}],
  "consts": []
})";
}

// ---- random circuits (valid by construction) ------------------------

struct RandomCircuitCfg {
  std::size_t n_pi = 3;
  std::size_t n_po = 3;
  std::size_t n_ff = 12;
  std::size_t n_gate = 24;
  double bus_fraction = 0.5;
};

// Gates only reference earlier gates, so the combinational subgraph is
// acyclic by construction; FF D pins and POs may reference anything.
inline CircuitGraph random_circuit(std::uint64_t seed, const RandomCircuitCfg& cfg = {}) {
  Rng rng(seed);
  CircuitGraph c;
  c.name = "rand_" + std::to_string(seed);

  auto add = [&](NodeKind kind, std::string name) -> Node& {
    Node nd;
    nd.id = static_cast<NodeId>(c.nodes.size());
    nd.kind = kind;
    nd.name = std::move(name);
    c.nodes.push_back(std::move(nd));
    return c.nodes.back();
  };

  std::vector<NodeId> sources;  // PIs, FFs, consts, then gates as they appear
  for (std::size_t i = 0; i < cfg.n_pi; ++i) {
    add(NodeKind::PrimaryInput, "pi" + std::to_string(i));
    sources.push_back(c.nodes.back().id);
  }
  add(NodeKind::Constant, "c0").const_value = 0;
  sources.push_back(c.nodes.back().id);
  add(NodeKind::Constant, "c1").const_value = 1;
  sources.push_back(c.nodes.back().id);

  const std::vector<std::string> module_pool = {"top", "alpha", "beta"};
  std::vector<NodeId> ff_ids;
  std::size_t made = 0;
  while (made < cfg.n_ff) {
    const bool as_bus = rng.unit() < cfg.bus_fraction && cfg.n_ff - made >= 2;
    const std::size_t width =
        as_bus ? 2 + rng.below(std::min<std::size_t>(cfg.n_ff - made - 1, 5)) : 1;
    const std::string bus_name = "r" + std::to_string(made);
    const std::string module = module_pool[rng.below(module_pool.size())];
    for (std::size_t b = 0; b < width; ++b) {
      Node& nd = add(NodeKind::FlipFlop, bus_name + "_" + std::to_string(b));
      nd.reset_value = static_cast<int>(rng.below(2));
      nd.module_path = {"top", module};
      if (as_bus) nd.bus = BusRef{bus_name, static_cast<std::uint32_t>(b)};
      nd.fanin = {kNoNode};
      ff_ids.push_back(nd.id);
      sources.push_back(nd.id);
    }
    made += width;
  }

  const GateFn fns[] = {GateFn::And, GateFn::Or,  GateFn::Not,  GateFn::Xor, GateFn::Nand,
                        GateFn::Nor, GateFn::Xnor, GateFn::Mux2, GateFn::Buf};
  for (std::size_t i = 0; i < cfg.n_gate; ++i) {
    Node& nd = add(NodeKind::Gate, "g" + std::to_string(i));
    nd.fn = fns[rng.below(9)];
    const int arity = gate_arity(nd.fn);
    for (int p = 0; p < arity; ++p)
      nd.fanin.push_back(sources[rng.below(sources.size())]);
    sources.push_back(nd.id);
  }

  for (NodeId ff : ff_ids) c.nodes[ff].fanin[0] = sources[rng.below(sources.size())];
  for (std::size_t i = 0; i < cfg.n_po; ++i) {
    Node& nd = add(NodeKind::PrimaryOutput, "po" + std::to_string(i));
    nd.fanin = {sources[rng.below(sources.size())]};
  }

  c.finalize();
  return c;
}

// ---- oracles ---------------------------------------------------------

// FF/PI -> FF/PO edges recomputed backward: for every sink pin, expand
// drivers through gates with memoized source sets.
inline std::set<std::pair<NodeId, NodeId>> oracle_ff_edges(const CircuitGraph& c) {
  std::vector<std::set<NodeId>> gate_sources(c.nodes.size());
  std::vector<int> state(c.nodes.size(), 0);

  std::function<const std::set<NodeId>&(NodeId)> sources_of = [&](NodeId id)
      -> const std::set<NodeId>& {
    static const std::set<NodeId> empty;
    const Node& nd = c.nodes[id];
    if (nd.kind == NodeKind::Gate) {
      if (state[id] == 0) {
        state[id] = 1;
        for (NodeId drv : nd.fanin) {
          const Node& d = c.nodes[drv];
          if (d.kind == NodeKind::FlipFlop || d.kind == NodeKind::PrimaryInput) {
            gate_sources[id].insert(drv);
          } else if (d.kind == NodeKind::Gate) {
            const auto& sub = sources_of(drv);
            gate_sources[id].insert(sub.begin(), sub.end());
          }
        }
      }
      return gate_sources[id];
    }
    return empty;
  };

  std::set<std::pair<NodeId, NodeId>> edges;
  for (const Node& nd : c.nodes) {
    if (nd.kind != NodeKind::FlipFlop && nd.kind != NodeKind::PrimaryOutput) continue;
    const NodeId drv = nd.fanin[0];
    const Node& d = c.nodes[drv];
    if (d.kind == NodeKind::FlipFlop || d.kind == NodeKind::PrimaryInput) {
      edges.emplace(drv, nd.id);
    } else if (d.kind == NodeKind::Gate) {
      for (NodeId src : sources_of(drv)) edges.emplace(src, nd.id);
    }
  }
  return edges;
}

// Vertex ids of the dependency graph (paths only ever visit these).
inline std::vector<NodeId> graph_vertices(const FFDependencyGraph& g) {
  std::vector<NodeId> verts;
  for (NodeId id = 0; id < g.circuit->nodes.size(); ++id)
    if (g.is_vertex(id)) verts.push_back(id);
  return verts;
}

// Boolean reachability closure (>= 1 edge) by Floyd-Warshall over node ids.
inline std::vector<std::vector<bool>> oracle_closure(const FFDependencyGraph& g) {
  const std::size_t n = g.circuit->nodes.size();
  const auto verts = graph_vertices(g);
  std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
  for (NodeId u : verts)
    for (NodeId v : g.succ[u]) reach[u][v] = true;
  for (NodeId k : verts)
    for (NodeId i : verts) {
      if (!reach[i][k]) continue;
      for (NodeId j : verts)
        if (reach[k][j]) reach[i][j] = true;
    }
  return reach;
}

// All-pairs shortest hop counts by min-plus Floyd-Warshall; -1 = unreachable.
inline std::vector<std::vector<long>> oracle_all_pairs(const FFDependencyGraph& g) {
  const std::size_t n = g.circuit->nodes.size();
  const auto verts = graph_vertices(g);
  const long inf = static_cast<long>(4 * n + 16);
  std::vector<std::vector<long>> d(n, std::vector<long>(n, inf));
  for (NodeId u : verts)
    for (NodeId v : g.succ[u]) d[u][v] = 1;
  for (NodeId k : verts)
    for (NodeId i : verts) {
      if (d[i][k] >= inf) continue;
      for (NodeId j : verts) d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
    }
  for (auto& row : d)
    for (auto& x : row)
      if (x >= inf) x = -1;
  return d;
}

// ---- clustering fixtures and oracles ---------------------------------

inline FeatureMatrix matrix_from(const std::vector<std::vector<double>>& pts,
                                 std::vector<std::string> names = {}) {
  FeatureMatrix m;
  const std::size_t n = pts.size();
  if (names.empty())
    for (std::size_t i = 0; i < n; ++i)
      names.push_back("ff" + std::string(1, char('a' + i / 26)) +
                      std::string(1, char('a' + i % 26)));
  m.ff_names = std::move(names);
  m.standardized = true;
  m.data.assign(n * kFeatureCount, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < pts[i].size(); ++j) m.data[i * kFeatureCount + j] = pts[i][j];
  return m;
}

// Axis-aligned blobs in the first two feature columns.
inline FeatureMatrix blobs(Rng& rng, const std::vector<std::pair<double, double>>& centers,
                           std::size_t per_blob, double spread,
                           std::vector<std::uint32_t>* truth = nullptr) {
  std::vector<std::vector<double>> pts;
  for (std::size_t b = 0; b < centers.size(); ++b) {
    for (std::size_t i = 0; i < per_blob; ++i) {
      pts.push_back({centers[b].first + (rng.unit() - 0.5) * 2 * spread,
                     centers[b].second + (rng.unit() - 0.5) * 2 * spread});
      if (truth) truth->push_back(static_cast<std::uint32_t>(b));
    }
  }
  return matrix_from(pts);
}

// Partition signature independent of labeling: set of member-name sets.
inline std::set<std::set<std::string>> partition_of(const Clustering& cl) {
  std::vector<std::set<std::string>> groups(cl.n_clusters);
  for (std::size_t r = 0; r < cl.ff_names.size(); ++r)
    groups[cl.assignment[r]].insert(cl.ff_names[r]);
  return {groups.begin(), groups.end()};
}

inline double sse_of_partition(const FeatureMatrix& m, const std::vector<std::uint32_t>& labels,
                               std::uint32_t k) {
  std::vector<double> centroid(k * kFeatureCount, 0.0);
  std::vector<std::size_t> count(k, 0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < kFeatureCount; ++j)
      centroid[labels[i] * kFeatureCount + j] += m.row(i)[j];
    ++count[labels[i]];
  }
  for (std::uint32_t c = 0; c < k; ++c)
    for (std::size_t j = 0; j < kFeatureCount; ++j)
      centroid[c * kFeatureCount + j] /= double(count[c]);
  double sse = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
      const double d = m.row(i)[j] - centroid[labels[i] * kFeatureCount + j];
      sse += d * d;
    }
  return sse;
}

// Exhaustive minimum-SSE partition into exactly k nonempty clusters.
inline double best_partition(const FeatureMatrix& m, std::uint32_t k,
                             std::vector<std::uint32_t>* arg = nullptr) {
  const std::size_t n = m.rows();
  std::vector<std::uint32_t> labels(n, 0);
  double best = std::numeric_limits<double>::infinity();
  while (true) {
    std::set<std::uint32_t> used(labels.begin(), labels.end());
    if (used.size() == k) {
      const double sse = sse_of_partition(m, labels, k);
      if (sse < best) {
        best = sse;
        if (arg) *arg = labels;
      }
    }
    std::size_t pos = 0;
    while (pos < n && labels[pos] == k - 1) labels[pos++] = 0;
    if (pos == n) break;
    ++labels[pos];
  }
  return best;
}

// Literal restatement of the complete-linkage merge rule: rescan every
// active pair each step, ties to the smallest (i, j).
inline std::vector<std::uint32_t> naive_complete_linkage(const FeatureMatrix& m, std::uint32_t k,
                                                         std::vector<double>* merge_dists = nullptr) {
  const std::size_t n = m.rows();
  std::vector<std::vector<std::size_t>> members(n);
  std::vector<bool> active(n, true);
  for (std::size_t i = 0; i < n; ++i) members[i] = {i};

  auto naive_l1 = [&](std::size_t a, std::size_t b) {
    double s = 0.0;
    for (std::size_t j = 0; j < kFeatureCount; ++j)
      s += std::fabs(m.row(a)[j] - m.row(b)[j]);
    return s;
  };

  std::size_t n_active = n;
  while (n_active > k) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = n, bj = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (!active[j]) continue;
        double d = 0.0;
        for (std::size_t a : members[i])
          for (std::size_t b : members[j]) d = std::max(d, naive_l1(a, b));
        if (d < best) {
          best = d;
          bi = i;
          bj = j;
        }
      }
    }
    if (merge_dists) merge_dists->push_back(best);
    members[bi].insert(members[bi].end(), members[bj].begin(), members[bj].end());
    active[bj] = false;
    --n_active;
  }

  std::vector<std::uint32_t> slot(n);
  for (std::size_t i = 0; i < n; ++i)
    if (active[i])
      for (std::size_t r : members[i]) slot[r] = static_cast<std::uint32_t>(i);
  std::vector<std::uint32_t> remap(n, UINT32_MAX), out(n);
  std::uint32_t next = 0;
  for (std::size_t r = 0; r < n; ++r) {
    if (remap[slot[r]] == UINT32_MAX) remap[slot[r]] = next++;
    out[r] = remap[slot[r]];
  }
  return out;
}

inline FeatureMatrix random_int_matrix(Rng& rng, std::size_t n, int span) {
  std::vector<std::vector<double>> pts(n, std::vector<double>(kFeatureCount));
  for (auto& row : pts)
    for (auto& v : row) v = double(rng.below(2 * span + 1)) - span;
  return matrix_from(pts);
}

// Straight-loop reimplementation of the DB definition.
inline double naive_db(const FeatureMatrix& m, const Clustering& cl) {
  const std::uint32_t nc = cl.n_clusters;
  std::vector<std::vector<double>> cent(nc, std::vector<double>(kFeatureCount, 0.0));
  std::vector<std::size_t> size(nc, 0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    ++size[cl.assignment[i]];
    for (std::size_t j = 0; j < kFeatureCount; ++j) cent[cl.assignment[i]][j] += m.row(i)[j];
  }
  for (std::uint32_t c = 0; c < nc; ++c)
    for (auto& v : cent[c]) v /= double(size[c]);
  std::vector<double> s(nc, 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double d2 = 0.0;
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
      const double d = m.row(i)[j] - cent[cl.assignment[i]][j];
      d2 += d * d;
    }
    s[cl.assignment[i]] += std::sqrt(d2);
  }
  for (std::uint32_t c = 0; c < nc; ++c) s[c] /= double(size[c]);
  double sum = 0.0;
  for (std::uint32_t i = 0; i < nc; ++i) {
    double worst = 0.0;
    for (std::uint32_t j = 0; j < nc; ++j) {
      if (i == j) continue;
      double d2 = 0.0;
      for (std::size_t t = 0; t < kFeatureCount; ++t) {
        const double d = cent[i][t] - cent[j][t];
        d2 += d * d;
      }
      worst = std::max(worst, (s[i] + s[j]) / std::sqrt(d2));
    }
    sum += worst;
  }
  return sum / nc;
}

// Activity by materializing the whole per-cycle value sequence.
inline ActivityStats oracle_activity(const SignalTimeline& tl) {
  std::vector<int> values(tl.horizon, tl.initial);
  for (const auto& [cycle, v] : tl.transitions)
    for (std::uint64_t c = cycle; c < tl.horizon; ++c) values[c] = v;
  ActivityStats st;
  st.ff_name = tl.ff_name;
  std::uint64_t ones = 0;
  for (int v : values) ones += v;
  st.frac_at_1 = double(ones) / double(tl.horizon);
  st.frac_at_0 = double(tl.horizon - ones) / double(tl.horizon);
  st.state_changes = tl.transitions.size();
  return st;
}

}  // namespace tutil
