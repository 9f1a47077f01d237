#include "ffc/faultsim.hpp"

#include <algorithm>
#include <cstring>
#include <sstream>

#include "ffc/io.hpp"
#include "ffc/parallel.hpp"
#include "ffc/rng.hpp"
#include "json.hpp"

namespace ffc {

using nlohmann::json;

Workload parse_workload(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SimError(std::string("workload: ") + e.what());
  }
  try {
    Workload w;
    w.name = doc.at("name").get<std::string>();
    w.horizon = doc.at("horizon").get<std::uint64_t>();
    const json& win = doc.at("window");
    if (!win.is_array() || win.size() != 2) throw SimError("workload: window must be [start, end)");
    w.window_start = win[0].get<std::uint64_t>();
    w.window_end = win[1].get<std::uint64_t>();
    const json& st = doc.at("stimulus");
    const std::string kind = st.at("kind").get<std::string>();
    if (kind == "table") {
      w.stimulus.kind = Stimulus::Kind::Table;
      for (const json& row : st.at("rows")) {
        std::vector<int> bits;
        for (const json& b : row) {
          const int v = b.get<int>();
          if (v != 0 && v != 1) throw SimError("workload: stimulus bits must be 0 or 1");
          bits.push_back(v);
        }
        w.stimulus.rows.push_back(std::move(bits));
      }
    } else if (kind == "random") {
      w.stimulus.kind = Stimulus::Kind::Random;
      w.stimulus.seed = st.at("seed").get<std::uint64_t>();
      w.stimulus.bias = st.at("bias").get<double>();
    } else {
      throw SimError("workload: unknown stimulus kind '" + kind + "'");
    }
    if (auto it = doc.find("monitored_outputs"); it != doc.end()) {
      w.monitor_all = false;
      for (const json& name : *it) w.monitored_outputs.push_back(name.get<std::string>());
    }
    if (w.horizon == 0) throw SimError("workload: horizon must be positive");
    if (!(w.window_start < w.window_end && w.window_end <= w.horizon))
      throw SimError("workload: require 0 <= start < end <= horizon");
    if (w.stimulus.kind == Stimulus::Kind::Random &&
        !(w.stimulus.bias >= 0.0 && w.stimulus.bias <= 1.0))
      throw SimError("workload: stimulus bias must be in [0, 1]");
    return w;
  } catch (const json::exception& e) {
    throw SimError(std::string("workload: malformed document: ") + e.what());
  }
}

std::string serialize_workload(const Workload& w) {
  json doc;
  doc["name"] = w.name;
  doc["horizon"] = w.horizon;
  doc["window"] = {w.window_start, w.window_end};
  if (w.stimulus.kind == Stimulus::Kind::Table) {
    doc["stimulus"] = {{"kind", "table"}, {"rows", w.stimulus.rows}};
  } else {
    doc["stimulus"] = {{"kind", "random"}, {"seed", w.stimulus.seed}, {"bias", w.stimulus.bias}};
  }
  if (!w.monitor_all) doc["monitored_outputs"] = w.monitored_outputs;
  return doc.dump(2) + "\n";
}

Workload load_workload_file(const std::string& path) { return parse_workload(slurp(path)); }

std::vector<SignalTimeline> GoldenRun::timelines(const CircuitGraph& c) const {
  std::vector<SignalTimeline> tls;
  tls.reserve(n_ff);
  for (std::size_t f = 0; f < n_ff; ++f) {
    SignalTimeline tl;
    tl.ff_name = c.nodes[c.ffs[f]].name;
    tl.horizon = horizon;
    tl.initial = ff_at(0, f);
    int prev = tl.initial;
    for (std::uint64_t cy = 1; cy < horizon; ++cy) {
      const int v = ff_at(cy, f);
      if (v != prev) {
        tl.transitions.emplace_back(cy, v);
        prev = v;
      }
    }
    tls.push_back(std::move(tl));
  }
  std::sort(tls.begin(), tls.end(),
            [](const SignalTimeline& a, const SignalTimeline& b) { return a.ff_name < b.ff_name; });
  return tls;
}

std::uint64_t CampaignResult::total_injections() const {
  std::uint64_t n = 0;
  for (const auto& t : targets) n += t.injections;
  return n;
}

std::uint64_t CampaignResult::total_failures() const {
  std::uint64_t f = 0;
  for (const auto& t : targets) f += t.failures;
  return f;
}

double CampaignResult::overall_rate() const {
  const std::uint64_t n = total_injections();
  if (n == 0) throw SimError("campaign: no injections");
  return static_cast<double>(total_failures()) / static_cast<double>(n);
}

std::string campaign_csv(const CampaignResult& r) {
  std::string out = "target,injections,failures,rate\n";
  for (const auto& t : r.targets) {
    out += t.target + "," + std::to_string(t.injections) + "," + std::to_string(t.failures) +
           "," + fmt_g9(t.rate) + "\n";
  }
  return out;
}

std::vector<TargetResult> parse_campaign_csv(const std::string& text) {
  const auto lines = split_lines(text);
  if (lines.empty() || lines[0] != "target,injections,failures,rate")
    throw SimError("campaign csv: bad header");
  std::vector<TargetResult> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cols = split_csv(lines[i]);
    if (cols.size() != 4) throw SimError("campaign csv: bad row '" + lines[i] + "'");
    TargetResult t;
    t.target = cols[0];
    t.injections = static_cast<std::uint64_t>(parse_int(cols[1]));
    t.failures = static_cast<std::uint64_t>(parse_int(cols[2]));
    if (t.injections == 0) throw SimError("campaign csv: zero injections for '" + t.target + "'");
    t.rate = static_cast<double>(t.failures) / static_cast<double>(t.injections);
    out.push_back(std::move(t));
  }
  return out;
}

namespace {

int eval_gate(GateFn fn, const std::uint8_t* v, const std::vector<NodeId>& pins) {
  switch (fn) {
    case GateFn::And: return v[pins[0]] & v[pins[1]];
    case GateFn::Or: return v[pins[0]] | v[pins[1]];
    case GateFn::Not: return v[pins[0]] ^ 1;
    case GateFn::Xor: return v[pins[0]] ^ v[pins[1]];
    case GateFn::Nand: return (v[pins[0]] & v[pins[1]]) ^ 1;
    case GateFn::Nor: return (v[pins[0]] | v[pins[1]]) ^ 1;
    case GateFn::Xnor: return v[pins[0]] ^ v[pins[1]] ^ 1;
    case GateFn::Mux2: return v[pins[0]] ? v[pins[2]] : v[pins[1]];
    case GateFn::Buf: return v[pins[0]];
  }
  return 0;
}

}  // namespace

Simulator::Simulator(const CircuitGraph& c, const Workload& w) : c_(&c), w_(w) {
  const std::size_t n_pi = c.pis.size();

  // Resolve the stimulus into a full horizon x n_pi table.
  stim_.assign(w.horizon * n_pi, 0);
  if (w.stimulus.kind == Stimulus::Kind::Table) {
    if (w.stimulus.rows.size() < w.horizon)
      throw SimError("workload '" + w.name + "': stimulus table has " +
                     std::to_string(w.stimulus.rows.size()) + " rows, horizon is " +
                     std::to_string(w.horizon));
    for (std::uint64_t cy = 0; cy < w.horizon; ++cy) {
      const auto& row = w.stimulus.rows[cy];
      if (row.size() != n_pi)
        throw SimError("workload '" + w.name + "': stimulus row " + std::to_string(cy) +
                       " has " + std::to_string(row.size()) + " bits, circuit has " +
                       std::to_string(n_pi) + " inputs");
      for (std::size_t p = 0; p < n_pi; ++p) stim_[cy * n_pi + p] = static_cast<std::uint8_t>(row[p]);
    }
  } else {
    for (std::uint64_t cy = 0; cy < w.horizon; ++cy) {
      for (std::size_t p = 0; p < n_pi; ++p) {
        const double u =
            static_cast<double>(mix_seed(w.stimulus.seed, cy, p) >> 11) * 0x1.0p-53;
        stim_[cy * n_pi + p] = u < w.stimulus.bias ? 1 : 0;
      }
    }
  }

  // Monitored outputs.
  if (w.monitor_all) {
    for (std::size_t i = 0; i < c.pos.size(); ++i) monitored_.push_back(i);
  } else {
    for (const std::string& name : w.monitored_outputs) {
      const NodeId id = c.id_of(name);
      if (c.nodes[id].kind != NodeKind::PrimaryOutput)
        throw SimError("workload '" + w.name + "': monitored signal '" + name +
                       "' is not a primary output");
      const auto it = std::find(c.pos.begin(), c.pos.end(), id);
      monitored_.push_back(static_cast<std::size_t>(it - c.pos.begin()));
    }
    std::sort(monitored_.begin(), monitored_.end());
    monitored_.erase(std::unique(monitored_.begin(), monitored_.end()), monitored_.end());
  }

  // Structural observability: reverse reachability from monitored POs
  // through gates and FF stages alike.
  observable_.assign(c.nodes.size(), 0);
  std::vector<NodeId> stack;
  for (std::size_t po : monitored_) stack.push_back(c.pos[po]);
  while (!stack.empty()) {
    const NodeId v = stack.back();
    stack.pop_back();
    if (observable_[v]) continue;
    observable_[v] = 1;
    for (NodeId drv : c.nodes[v].fanin) stack.push_back(drv);
  }

  ff_index_.assign(c.nodes.size(), 0);
  for (std::size_t f = 0; f < c.ffs.size(); ++f) ff_index_[c.ffs[f]] = f;
  for (const Node& nd : c.nodes)
    if (nd.kind == NodeKind::Constant) const_ids_.push_back(nd.id);

  // Golden run: cycle 0 applies resets, then per cycle evaluate gates,
  // sample POs, clock FFs.
  const std::size_t n_ff = c.ffs.size();
  const std::size_t n_po = c.pos.size();
  golden_.horizon = w.horizon;
  golden_.n_ff = n_ff;
  golden_.n_po = n_po;
  golden_.ff_states.assign(w.horizon * n_ff, 0);
  golden_.po_values.assign(w.horizon * n_po, 0);

  std::vector<std::uint8_t> state(n_ff);
  for (std::size_t f = 0; f < n_ff; ++f)
    state[f] = static_cast<std::uint8_t>(c.nodes[c.ffs[f]].reset_value);

  std::vector<std::uint8_t> value(c.nodes.size(), 0);
  init_constants(value);
  for (std::uint64_t cy = 0; cy < w.horizon; ++cy) {
    if (n_ff > 0) std::memcpy(&golden_.ff_states[cy * n_ff], state.data(), n_ff);
    for (std::size_t p = 0; p < n_pi; ++p) value[c.pis[p]] = stim_[cy * n_pi + p];
    for (std::size_t f = 0; f < n_ff; ++f) value[c.ffs[f]] = state[f];
    eval_combinational(value);
    for (std::size_t o = 0; o < n_po; ++o)
      golden_.po_values[cy * n_po + o] = value[c.nodes[c.pos[o]].fanin[0]];
    for (std::size_t f = 0; f < n_ff; ++f) state[f] = value[c.nodes[c.ffs[f]].fanin[0]];
  }
}

void Simulator::init_constants(std::vector<std::uint8_t>& value) const {
  for (NodeId id : const_ids_)
    value[id] = static_cast<std::uint8_t>(c_->nodes[id].const_value);
}

void Simulator::eval_combinational(std::vector<std::uint8_t>& value) const {
  const CircuitGraph& c = *c_;
  for (NodeId g : c.topo_gates)
    value[g] = static_cast<std::uint8_t>(eval_gate(c.nodes[g].fn, value.data(), c.nodes[g].fanin));
}

FailureVerdict Simulator::inject_seu(NodeId ff, std::uint64_t cycle) const {
  const CircuitGraph& c = *c_;
  if (ff >= c.nodes.size() || c.nodes[ff].kind != NodeKind::FlipFlop)
    throw SimError("inject: node is not a flip-flop");
  if (cycle < w_.window_start || cycle >= w_.window_end)
    throw SimError("inject: cycle " + std::to_string(cycle) + " outside injection window [" +
                   std::to_string(w_.window_start) + ", " + std::to_string(w_.window_end) + ")");

  FailureVerdict verdict;
  verdict.ff_name = c.nodes[ff].name;
  verdict.cycle = cycle;

  if (!observable_[ff]) return verdict;  // no structural path to a monitored PO

  const std::size_t n_pi = c.pis.size();
  const std::size_t n_ff = golden_.n_ff;

  std::vector<std::uint8_t> state(&golden_.ff_states[cycle * n_ff],
                                  &golden_.ff_states[cycle * n_ff] + n_ff);
  state[ff_index_[ff]] ^= 1;

  std::vector<std::uint8_t> value(c.nodes.size(), 0);
  init_constants(value);
  for (std::uint64_t cy = cycle; cy < w_.horizon; ++cy) {
    for (std::size_t p = 0; p < n_pi; ++p) value[c.pis[p]] = stim_[cy * n_pi + p];
    for (std::size_t f = 0; f < n_ff; ++f) value[c.ffs[f]] = state[f];
    eval_combinational(value);
    for (std::size_t o : monitored_) {
      if (value[c.nodes[c.pos[o]].fanin[0]] != golden_.po_at(cy, o)) {
        verdict.outcome = Outcome::FunctionalFailure;
        verdict.first_divergence = cy;
        return verdict;
      }
    }
    if (cy + 1 >= w_.horizon) break;
    for (std::size_t f = 0; f < n_ff; ++f) state[f] = value[c.nodes[c.ffs[f]].fanin[0]];
    // Fault effect gone: the rest of the run matches golden exactly.
    if (std::memcmp(state.data(), &golden_.ff_states[(cy + 1) * n_ff], n_ff) == 0) break;
  }
  return verdict;
}

double Simulator::exhaustive_rate(NodeId ff, int threads) const {
  const std::uint64_t len = w_.window_end - w_.window_start;
  std::vector<std::uint8_t> fail(len, 0);
  parallel_for(len, threads, [&](std::size_t i) {
    const auto v = inject_seu(ff, w_.window_start + i);
    fail[i] = v.outcome == Outcome::FunctionalFailure ? 1 : 0;
  });
  std::uint64_t failures = 0;
  for (std::uint8_t f : fail) failures += f;
  return static_cast<double>(failures) / static_cast<double>(len);
}

CampaignResult Simulator::run_campaign(Granularity granularity,
                                       const std::vector<TargetSpec>& targets,
                                       std::uint64_t n_per_target, std::uint64_t seed,
                                       int threads) const {
  if (targets.empty()) throw SimError("campaign: no targets");
  if (n_per_target == 0) throw SimError("campaign: n_per_target must be positive");
  std::vector<std::uint8_t> claimed(c_->nodes.size(), 0);
  for (const auto& t : targets) {
    if (t.ffs.empty()) throw SimError("campaign: empty target set '" + t.name + "'");
    if (granularity == Granularity::PerFF && t.ffs.size() != 1)
      throw SimError("campaign: per-FF target '" + t.name + "' must hold exactly one FF");
    for (NodeId ff : t.ffs) {
      if (ff >= claimed.size() || c_->nodes[ff].kind != NodeKind::FlipFlop)
        throw SimError("campaign: target '" + t.name + "' contains a non-FF node");
      if (claimed[ff]++)
        throw SimError("campaign: targets overlap on flip-flop '" + c_->nodes[ff].name + "'");
    }
  }

  CampaignResult result;
  result.granularity = granularity;
  result.circuit = c_->name;
  result.workload = w_.name;
  result.seed = seed;
  result.n_per_target = n_per_target;
  result.targets.resize(targets.size());

  const std::uint64_t win_len = w_.window_end - w_.window_start;
  parallel_for(targets.size(), threads, [&](std::size_t t) {
    const TargetSpec& spec = targets[t];
    std::uint64_t failures = 0;
    for (std::uint64_t j = 0; j < n_per_target; ++j) {
      // One independent stream per (target, injection): results do not
      // depend on execution order or thread count.
      Rng rng(mix_seed(seed, t, j));
      const NodeId ff = spec.ffs.size() == 1
                            ? spec.ffs[0]
                            : spec.ffs[static_cast<std::size_t>(rng.below(spec.ffs.size()))];
      const std::uint64_t cycle = w_.window_start + rng.below(win_len);
      if (inject_seu(ff, cycle).outcome == Outcome::FunctionalFailure) ++failures;
    }
    TargetResult& out = result.targets[t];
    out.target = spec.name;
    out.injections = n_per_target;
    out.failures = failures;
    out.rate = static_cast<double>(failures) / static_cast<double>(n_per_target);
  });
  return result;
}

}  // namespace ffc
