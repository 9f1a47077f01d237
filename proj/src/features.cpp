#include "ffc/features.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <set>

#include "ffc/io.hpp"
#include "ffc/kernels.hpp"

namespace ffc {

const std::array<const char*, kFeatureCount> kFeatureNames = {
    "n_ff_startpoint", "n_ff_endpoint",  "n_conn_from_ff",    "n_conn_to_ff",
    "n_conn_from_pi",  "n_conn_to_po",   "stages_from_pi_max", "stages_from_pi_avg",
    "stages_from_pi_min", "stages_to_po_max", "stages_to_po_avg", "stages_to_po_min",
    "feedback_depth",  "bus_position",   "bus_length",        "bus_label",
    "module_label",    "frac_at_0",      "frac_at_1",         "state_changes",
};

namespace {

void require_ff(const FFDependencyGraph& g, NodeId ff) {
  if (ff >= g.circuit->nodes.size() || g.circuit->nodes[ff].kind != NodeKind::FlipFlop)
    throw FeatureError("unknown flip-flop id " + std::to_string(ff));
}

// BFS over one adjacency direction; dist[v] = hops from src, -1 unreachable.
std::vector<std::int64_t> bfs(const std::vector<std::vector<NodeId>>& adj, std::size_t n,
                              NodeId src) {
  std::vector<std::int64_t> dist(n, -1);
  std::deque<NodeId> q{src};
  dist[src] = 0;
  while (!q.empty()) {
    const NodeId u = q.front();
    q.pop_front();
    for (NodeId v : adj[u]) {
      if (dist[v] < 0) {
        dist[v] = dist[u] + 1;
        q.push_back(v);
      }
    }
  }
  return dist;
}

}  // namespace

std::uint64_t distance_sentinel(const FFDependencyGraph& g) {
  return g.circuit->ff_count() + 1;
}

std::pair<std::uint64_t, std::uint64_t> direct_ff_degree(const FFDependencyGraph& g, NodeId ff) {
  require_ff(g, ff);
  const CircuitGraph& c = *g.circuit;
  std::uint64_t in = 0, out = 0;
  for (NodeId p : g.pred[ff])
    if (c.nodes[p].kind == NodeKind::FlipFlop) ++in;
  for (NodeId s : g.succ[ff])
    if (c.nodes[s].kind == NodeKind::FlipFlop) ++out;
  return {in, out};
}

std::pair<std::uint64_t, std::uint64_t> transitive_ff_connections(const FFDependencyGraph& g,
                                                                  NodeId ff) {
  require_ff(g, ff);
  const CircuitGraph& c = *g.circuit;
  auto count_ffs = [&](const std::vector<std::vector<NodeId>>& adj) {
    // Reachable via >= 1 edge: seed with ff's neighbors, ff itself counts
    // only if rediscovered through a cycle.
    std::vector<std::uint8_t> seen(c.nodes.size(), 0);
    std::deque<NodeId> q;
    for (NodeId v : adj[ff]) {
      if (!seen[v]) {
        seen[v] = 1;
        q.push_back(v);
      }
    }
    std::uint64_t count = 0;
    while (!q.empty()) {
      const NodeId u = q.front();
      q.pop_front();
      if (c.nodes[u].kind == NodeKind::FlipFlop) ++count;
      for (NodeId v : adj[u]) {
        if (!seen[v]) {
          seen[v] = 1;
          q.push_back(v);
        }
      }
    }
    return count;
  };
  return {count_ffs(g.pred), count_ffs(g.succ)};
}

std::pair<std::uint64_t, std::uint64_t> pi_po_connections(const FFDependencyGraph& g, NodeId ff) {
  require_ff(g, ff);
  const CircuitGraph& c = *g.circuit;
  std::uint64_t from_pi = 0, to_po = 0;
  const auto back = bfs(g.pred, c.nodes.size(), ff);
  for (NodeId pi : c.pis)
    if (back[pi] > 0) ++from_pi;
  const auto fwd = bfs(g.succ, c.nodes.size(), ff);
  for (NodeId po : c.pos)
    if (fwd[po] > 0) ++to_po;
  return {from_pi, to_po};
}

StageStats stage_distance_stats(const FFDependencyGraph& g, NodeId ff) {
  require_ff(g, ff);
  const CircuitGraph& c = *g.circuit;
  const double sentinel = static_cast<double>(distance_sentinel(g));

  auto aggregate = [&](const std::vector<std::int64_t>& dist, const std::vector<NodeId>& ends,
                       double& mx, double& avg, double& mn) {
    std::uint64_t n = 0, total = 0;
    std::int64_t lo = 0, hi = 0;
    for (NodeId e : ends) {
      if (dist[e] <= 0) continue;  // unreachable, or the FF itself
      if (n == 0) {
        lo = hi = dist[e];
      } else {
        lo = std::min(lo, dist[e]);
        hi = std::max(hi, dist[e]);
      }
      total += static_cast<std::uint64_t>(dist[e]);
      ++n;
    }
    if (n == 0) {
      mx = avg = mn = sentinel;
    } else {
      mx = static_cast<double>(hi);
      mn = static_cast<double>(lo);
      avg = static_cast<double>(total) / static_cast<double>(n);
    }
  };

  StageStats st{};
  const auto back = bfs(g.pred, c.nodes.size(), ff);
  aggregate(back, c.pis, st.from_pi_max, st.from_pi_avg, st.from_pi_min);
  const auto fwd = bfs(g.succ, c.nodes.size(), ff);
  aggregate(fwd, c.pos, st.to_po_max, st.to_po_avg, st.to_po_min);
  return st;
}

std::uint64_t feedback_depth(const FFDependencyGraph& g, NodeId ff) {
  require_ff(g, ff);
  const auto dist = bfs(g.succ, g.circuit->nodes.size(), ff);
  std::int64_t best = -1;
  for (NodeId p : g.pred[ff]) {
    if (dist[p] < 0) continue;
    const std::int64_t cycle_len = dist[p] + 1;
    if (best < 0 || cycle_len < best) best = cycle_len;
  }
  return best < 0 ? distance_sentinel(g) : static_cast<std::uint64_t>(best);
}

BusModuleFeatures bus_and_module_features(const CircuitGraph& c, NodeId ff) {
  if (ff >= c.nodes.size() || c.nodes[ff].kind != NodeKind::FlipFlop)
    throw FeatureError("unknown flip-flop id " + std::to_string(ff));

  std::map<std::string, std::uint64_t> bus_width;
  std::set<std::string> modules;
  std::vector<std::string> scalar_ffs;
  for (NodeId id : c.ffs) {
    const Node& nd = c.nodes[id];
    if (nd.bus) {
      auto& w = bus_width[nd.bus->name];
      w = std::max<std::uint64_t>(w, nd.bus->index + 1);
    } else {
      scalar_ffs.push_back(nd.name);
    }
    std::string joined;
    for (const auto& m : nd.module_path) joined += "/" + m;
    modules.insert(joined);
  }
  std::sort(scalar_ffs.begin(), scalar_ffs.end());

  const Node& nd = c.nodes[ff];
  BusModuleFeatures out{};
  if (nd.bus) {
    out.bus_position = nd.bus->index;
    out.bus_length = bus_width.at(nd.bus->name);
    out.bus_label = static_cast<std::uint64_t>(
        std::distance(bus_width.begin(), bus_width.find(nd.bus->name)));
  } else {
    out.bus_position = 0;
    out.bus_length = 1;
    const auto it = std::lower_bound(scalar_ffs.begin(), scalar_ffs.end(), nd.name);
    out.bus_label = bus_width.size() + static_cast<std::uint64_t>(it - scalar_ffs.begin());
  }
  std::string joined;
  for (const auto& m : nd.module_path) joined += "/" + m;
  out.module_label = static_cast<std::uint64_t>(
      std::distance(modules.begin(), modules.find(joined)));
  return out;
}

FeatureMatrix assemble(const CircuitGraph& c, const FFDependencyGraph& g,
                       const std::vector<ActivityStats>& activity) {
  std::map<std::string, const ActivityStats*> act_by_name;
  for (const auto& a : activity) act_by_name[a.ff_name] = &a;
  std::set<std::string> ff_names;
  for (NodeId id : c.ffs) ff_names.insert(c.nodes[id].name);
  for (const auto& [name, a] : act_by_name)
    if (!ff_names.count(name))
      throw FeatureError("activity present for unknown flip-flop '" + name + "'");

  FeatureMatrix m;
  for (const std::string& name : ff_names) m.ff_names.push_back(name);
  m.data.assign(m.rows() * kFeatureCount, 0.0);

  // Stage distances are aggregated from one BFS per PI / per PO rather than
  // per FF; same definition, linear passes.
  const std::size_t n_nodes = c.nodes.size();
  struct Agg {
    std::uint64_t n = 0, total = 0;
    std::int64_t lo = 0, hi = 0;
    void add(std::int64_t d) {
      if (n == 0) {
        lo = hi = d;
      } else {
        lo = std::min(lo, d);
        hi = std::max(hi, d);
      }
      total += static_cast<std::uint64_t>(d);
      ++n;
    }
  };
  std::vector<Agg> from_pi(n_nodes), to_po(n_nodes);
  std::vector<std::uint64_t> pi_reach(n_nodes, 0), po_reach(n_nodes, 0);
  for (NodeId pi : c.pis) {
    const auto dist = bfs(g.succ, n_nodes, pi);
    for (NodeId id : c.ffs) {
      if (dist[id] > 0) {
        from_pi[id].add(dist[id]);
        ++pi_reach[id];
      }
    }
  }
  for (NodeId po : c.pos) {
    const auto dist = bfs(g.pred, n_nodes, po);
    for (NodeId id : c.ffs) {
      if (dist[id] > 0) {
        to_po[id].add(dist[id]);
        ++po_reach[id];
      }
    }
  }
  const double sentinel = static_cast<double>(distance_sentinel(g));

  for (std::size_t r = 0; r < m.rows(); ++r) {
    const NodeId id = c.id_of(m.ff_names[r]);
    double* row = m.row(r);
    auto set = [&](Feat f, double v) { row[static_cast<std::size_t>(f)] = v; };

    const auto [deg_in, deg_out] = direct_ff_degree(g, id);
    set(Feat::FfStartpoint, static_cast<double>(deg_in));
    set(Feat::FfEndpoint, static_cast<double>(deg_out));

    const auto [conn_from, conn_to] = transitive_ff_connections(g, id);
    set(Feat::ConnFromFf, static_cast<double>(conn_from));
    set(Feat::ConnToFf, static_cast<double>(conn_to));

    set(Feat::ConnFromPi, static_cast<double>(pi_reach[id]));
    set(Feat::ConnToPo, static_cast<double>(po_reach[id]));

    const Agg& fp = from_pi[id];
    set(Feat::StagesFromPiMax, fp.n ? static_cast<double>(fp.hi) : sentinel);
    set(Feat::StagesFromPiAvg,
        fp.n ? static_cast<double>(fp.total) / static_cast<double>(fp.n) : sentinel);
    set(Feat::StagesFromPiMin, fp.n ? static_cast<double>(fp.lo) : sentinel);
    const Agg& tp = to_po[id];
    set(Feat::StagesToPoMax, tp.n ? static_cast<double>(tp.hi) : sentinel);
    set(Feat::StagesToPoAvg,
        tp.n ? static_cast<double>(tp.total) / static_cast<double>(tp.n) : sentinel);
    set(Feat::StagesToPoMin, tp.n ? static_cast<double>(tp.lo) : sentinel);

    set(Feat::FeedbackDepth, static_cast<double>(feedback_depth(g, id)));

    const BusModuleFeatures bm = bus_and_module_features(c, id);
    set(Feat::BusPosition, static_cast<double>(bm.bus_position));
    set(Feat::BusLength, static_cast<double>(bm.bus_length));
    set(Feat::BusLabel, static_cast<double>(bm.bus_label));
    set(Feat::ModuleLabel, static_cast<double>(bm.module_label));

    const auto it = act_by_name.find(m.ff_names[r]);
    if (it == act_by_name.end())
      throw FeatureError("no activity for flip-flop '" + m.ff_names[r] + "'");
    set(Feat::FracAt0, it->second->frac_at_0);
    set(Feat::FracAt1, it->second->frac_at_1);
    set(Feat::StateChanges, static_cast<double>(it->second->state_changes));
  }
  return m;
}

FeatureMatrix standardize(const FeatureMatrix& m) {
  if (m.rows() == 0) throw FeatureError("standardize: empty matrix");
  const std::size_t n = m.rows(), d = kFeatureCount;

  std::vector<double> mean(d, 0.0), var(d, 0.0);
  for (std::size_t r = 0; r < n; ++r) kern::add(mean.data(), m.row(r), d);
  for (std::size_t j = 0; j < d; ++j) mean[j] /= static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r) kern::sq_dev(var.data(), m.row(r), mean.data(), d);
  for (std::size_t j = 0; j < d; ++j) var[j] /= static_cast<double>(n);

  FeatureMatrix out;
  out.ff_names = m.ff_names;
  out.data.assign(n * d, 0.0);
  out.standardized = true;
  out.col_mean = mean;
  out.col_std.resize(d);
  for (std::size_t j = 0; j < d; ++j) out.col_std[j] = std::sqrt(var[j]);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < d; ++j) {
      out.row(r)[j] = out.col_std[j] == 0.0 ? 0.0 : (m.row(r)[j] - mean[j]) / out.col_std[j];
    }
  }
  return out;
}

std::string features_csv(const FeatureMatrix& m) {
  std::string out = "ff_name";
  for (const char* name : kFeatureNames) out += std::string(",") + name;
  out += "\n";
  for (std::size_t r = 0; r < m.rows(); ++r) {
    out += m.ff_names[r];
    for (std::size_t j = 0; j < kFeatureCount; ++j) out += "," + fmt_g9(m.row(r)[j]);
    out += "\n";
  }
  return out;
}

FeatureMatrix parse_features_csv(const std::string& text) {
  const auto lines = split_lines(text);
  if (lines.empty()) throw FeatureError("features csv: empty file");
  const auto header = split_csv(lines[0]);
  if (header.size() != kFeatureCount + 1 || header[0] != "ff_name")
    throw FeatureError("features csv: bad header");
  for (std::size_t j = 0; j < kFeatureCount; ++j)
    if (header[j + 1] != kFeatureNames[j])
      throw FeatureError("features csv: unexpected column '" + header[j + 1] + "'");
  FeatureMatrix m;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cols = split_csv(lines[i]);
    if (cols.size() != kFeatureCount + 1)
      throw FeatureError("features csv: bad row '" + lines[i] + "'");
    m.ff_names.push_back(cols[0]);
    for (std::size_t j = 0; j < kFeatureCount; ++j) m.data.push_back(parse_double(cols[j + 1]));
  }
  if (!std::is_sorted(m.ff_names.begin(), m.ff_names.end()))
    throw FeatureError("features csv: rows must be sorted by ff_name");
  return m;
}

}  // namespace ffc
