#include "ffc/trace.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <map>
#include <sstream>

namespace ffc {

namespace {

void check_timeline(const SignalTimeline& tl) {
  std::uint64_t prev_cycle = 0;
  int prev_val = tl.initial;
  for (std::size_t i = 0; i < tl.transitions.size(); ++i) {
    const auto& [cycle, value] = tl.transitions[i];
    if (cycle < 1 || cycle >= tl.horizon || (i > 0 && cycle <= prev_cycle))
      throw TraceError("timeline '" + tl.ff_name + "': transition cycles must be strictly increasing and < horizon");
    if (value == prev_val)
      throw TraceError("timeline '" + tl.ff_name + "': consecutive transition values must alternate");
    prev_cycle = cycle;
    prev_val = value;
  }
}

}  // namespace

ActivityStats compute_activity(const SignalTimeline& tl) {
  return compute_activity_window(tl, 0, tl.horizon);
}

ActivityStats compute_activity_window(const SignalTimeline& tl, std::uint64_t start,
                                      std::uint64_t end) {
  if (tl.horizon == 0) throw TraceError("timeline '" + tl.ff_name + "': zero horizon");
  if (end > tl.horizon || start >= end)
    throw TraceError("timeline '" + tl.ff_name + "': bad activity window");
  check_timeline(tl);

  std::uint64_t at[2] = {0, 0};
  std::uint64_t changes = 0;
  std::uint64_t seg_start = 0;
  int val = tl.initial;
  auto account = [&](std::uint64_t seg_end) {
    const std::uint64_t lo = std::max(seg_start, start);
    const std::uint64_t hi = std::min(seg_end, end);
    if (lo < hi) at[val] += hi - lo;
  };
  for (const auto& [cycle, value] : tl.transitions) {
    account(cycle);
    if (cycle > start && cycle < end) ++changes;
    seg_start = cycle;
    val = value;
  }
  account(tl.horizon);

  ActivityStats st;
  st.ff_name = tl.ff_name;
  const double span = static_cast<double>(end - start);
  st.frac_at_0 = static_cast<double>(at[0]) / span;
  st.frac_at_1 = static_cast<double>(at[1]) / span;
  st.state_changes = changes;
  return st;
}

namespace {

struct VcdVar {
  std::string id;                      // identifier code
  std::vector<std::string> bit_paths;  // MSB first for vectors; size 1 for scalars
};

struct Tokenizer {
  const std::string& text;
  std::size_t pos = 0;

  explicit Tokenizer(const std::string& t) : text(t) {}

  bool next(std::string& tok) {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    if (pos >= text.size()) return false;
    std::size_t begin = pos;
    while (pos < text.size() && !std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    tok.assign(text, begin, pos - begin);
    return true;
  }
};

void skip_to_end(Tokenizer& tz, const std::string& section) {
  std::string tok;
  while (tz.next(tok))
    if (tok == "$end") return;
  throw TraceError("vcd: unterminated " + section);
}

}  // namespace

VcdResult parse_vcd(const std::string& text, const std::map<std::string, std::string>& name_map,
                    std::uint64_t period_override) {
  Tokenizer tz(text);
  std::string tok;

  std::vector<std::string> scope;
  std::map<std::string, VcdVar> vars;  // by identifier code
  bool in_definitions = true;

  // Per mapped signal path: cycle -> value, last write wins.
  std::map<std::string, std::map<std::uint64_t, int>> values;
  std::uint64_t period = period_override ? period_override : 1;
  std::uint64_t cur_cycle = 0;
  std::uint64_t max_cycle = 0;
  bool period_fixed = period_override != 0;

  auto record = [&](const std::string& path, int value) {
    auto it = values.find(path);
    if (it != values.end()) it->second[cur_cycle] = value;
  };
  for (const auto& [path, ff] : name_map) values.emplace(path, std::map<std::uint64_t, int>{});

  auto scope_prefix = [&]() {
    std::string p;
    for (const auto& s : scope) p += s + ".";
    return p;
  };

  while (tz.next(tok)) {
    if (tok == "$timescale") {
      std::string body, t;
      while (tz.next(t) && t != "$end") body += body.empty() ? t : " " + t;
      if (!period_fixed) {
        std::size_t i = 0;
        std::uint64_t mag = 0;
        while (i < body.size() && std::isdigit(static_cast<unsigned char>(body[i])))
          mag = mag * 10 + static_cast<std::uint64_t>(body[i++] - '0');
        if (mag == 0) throw TraceError("vcd: bad $timescale '" + body + "'");
        period = mag;
      }
    } else if (tok == "$scope") {
      std::string kind, name;
      if (!tz.next(kind) || !tz.next(name)) throw TraceError("vcd: truncated $scope");
      scope.push_back(name);
      skip_to_end(tz, "$scope");
    } else if (tok == "$upscope") {
      if (scope.empty()) throw TraceError("vcd: $upscope without open scope");
      scope.pop_back();
      skip_to_end(tz, "$upscope");
    } else if (tok == "$var") {
      std::string type, width_s, id, ref;
      if (!tz.next(type) || !tz.next(width_s) || !tz.next(id) || !tz.next(ref))
        throw TraceError("vcd: truncated $var");
      if (type != "wire" && type != "reg")
        throw TraceError("vcd: unsupported $var type '" + type + "'");
      long width = std::strtol(width_s.c_str(), nullptr, 10);
      if (width <= 0) throw TraceError("vcd: bad $var width '" + width_s + "'");
      // Optional range token "[msb:lsb]" / "[idx]" before $end.
      long msb = width - 1, lsb = 0;
      std::string t;
      while (tz.next(t) && t != "$end") {
        if (t.size() >= 3 && t.front() == '[' && t.back() == ']') {
          const std::string inner = t.substr(1, t.size() - 2);
          const std::size_t colon = inner.find(':');
          if (colon == std::string::npos) {
            msb = lsb = std::strtol(inner.c_str(), nullptr, 10);
          } else {
            msb = std::strtol(inner.substr(0, colon).c_str(), nullptr, 10);
            lsb = std::strtol(inner.substr(colon + 1).c_str(), nullptr, 10);
          }
        }
      }
      VcdVar var;
      var.id = id;
      const std::string base = scope_prefix() + ref;
      if (width == 1 && msb == 0 && lsb == 0) {
        var.bit_paths.push_back(base);
      } else {
        if (msb - lsb + 1 != width)
          throw TraceError("vcd: $var '" + ref + "' range does not match width");
        for (long b = msb; b >= lsb; --b)
          var.bit_paths.push_back(base + "[" + std::to_string(b) + "]");
      }
      vars[id] = std::move(var);
    } else if (tok == "$enddefinitions") {
      skip_to_end(tz, "$enddefinitions");
      in_definitions = false;
    } else if (tok == "$comment" || tok == "$date" || tok == "$version") {
      skip_to_end(tz, tok);
    } else if (tok == "$dumpvars" || tok == "$dumpall" || tok == "$dumpon" ||
               tok == "$dumpoff" || tok == "$end") {
      // Dump sections wrap ordinary value changes; the tokens themselves
      // carry no information we need.
      continue;
    } else if (tok[0] == '#') {
      const std::uint64_t t_raw = std::strtoull(tok.c_str() + 1, nullptr, 10);
      cur_cycle = t_raw / period;
      max_cycle = std::max(max_cycle, cur_cycle);
    } else if (tok[0] == '0' || tok[0] == '1') {
      const std::string id = tok.substr(1);
      auto it = vars.find(id);
      if (it == vars.end()) throw TraceError("vcd: unknown identifier code '" + id + "'");
      if (it->second.bit_paths.size() != 1)
        throw TraceError("vcd: scalar change on vector identifier '" + id + "'");
      record(it->second.bit_paths[0], tok[0] - '0');
    } else if (tok[0] == 'x' || tok[0] == 'X' || tok[0] == 'z' || tok[0] == 'Z') {
      throw TraceError("vcd: four-state value change '" + tok + "' not supported");
    } else if (tok[0] == 'b' || tok[0] == 'B') {
      const std::string bits = tok.substr(1);
      std::string id;
      if (!tz.next(id)) throw TraceError("vcd: truncated vector change");
      auto it = vars.find(id);
      if (it == vars.end()) throw TraceError("vcd: unknown identifier code '" + id + "'");
      const auto& paths = it->second.bit_paths;
      if (bits.empty() || bits.size() > paths.size())
        throw TraceError("vcd: malformed vector change 'b" + bits + "' for '" + id + "'");
      // Left-extend with 0 to the declared width.
      const std::size_t pad = paths.size() - bits.size();
      for (std::size_t b = 0; b < paths.size(); ++b) {
        char ch = b < pad ? '0' : bits[b - pad];
        if (ch != '0' && ch != '1')
          throw TraceError("vcd: four-state bit in vector change 'b" + bits + "'");
        record(paths[b], ch - '0');
      }
    } else {
      throw TraceError("vcd: malformed value change '" + tok + "'");
    }
  }
  if (in_definitions) throw TraceError("vcd: missing $enddefinitions");

  VcdResult res;
  std::uint64_t last_change = 0;
  for (const auto& [path, series] : values)
    if (!series.empty()) last_change = std::max(last_change, series.rbegin()->first);
  const std::uint64_t horizon = std::max<std::uint64_t>(max_cycle, last_change + 1);

  for (const auto& [path, ff_name] : name_map) {
    const auto& series = values.at(path);
    if (series.empty()) {
      res.warnings.push_back("flip-flop '" + ff_name + "': mapped signal '" + path +
                             "' not present in VCD");
      continue;
    }
    auto it0 = series.find(0);
    if (it0 == series.end())
      throw TraceError("vcd: signal '" + path + "' has no value at time 0");
    SignalTimeline tl;
    tl.ff_name = ff_name;
    tl.initial = it0->second;
    tl.horizon = horizon;
    int prev = tl.initial;
    for (const auto& [cycle, value] : series) {
      if (cycle == 0 || value == prev) continue;
      tl.transitions.emplace_back(cycle, value);
      prev = value;
    }
    res.timelines.push_back(std::move(tl));
  }
  std::sort(res.timelines.begin(), res.timelines.end(),
            [](const SignalTimeline& a, const SignalTimeline& b) { return a.ff_name < b.ff_name; });
  return res;
}

namespace {

std::string vcd_id(std::size_t n) {
  // Printable identifier codes '!'..'~', base 94.
  std::string id;
  do {
    id += static_cast<char>('!' + n % 94);
    n /= 94;
  } while (n > 0);
  return id;
}

struct BusGroup {
  std::string name;
  std::vector<NodeId> bits;  // index -> ff id, kNoNode if missing
  bool complete = false;
};

std::map<std::string, BusGroup> bus_groups(const CircuitGraph& c) {
  std::map<std::string, BusGroup> groups;
  for (NodeId id : c.ffs) {
    const Node& nd = c.nodes[id];
    if (!nd.bus) continue;
    BusGroup& g = groups[nd.bus->name];
    g.name = nd.bus->name;
    if (g.bits.size() <= nd.bus->index) g.bits.resize(nd.bus->index + 1, kNoNode);
    g.bits[nd.bus->index] = id;
  }
  for (auto& [name, g] : groups)
    g.complete = std::none_of(g.bits.begin(), g.bits.end(),
                              [](NodeId b) { return b == kNoNode; });
  return groups;
}

}  // namespace

std::map<std::string, std::string> vcd_name_map(const CircuitGraph& c) {
  std::map<std::string, std::string> map;
  const auto groups = bus_groups(c);
  for (NodeId id : c.ffs) {
    const Node& nd = c.nodes[id];
    if (nd.bus && groups.at(nd.bus->name).complete) {
      map[c.name + "." + nd.bus->name + "[" + std::to_string(nd.bus->index) + "]"] = nd.name;
    } else {
      map[c.name + "." + nd.name] = nd.name;
    }
  }
  return map;
}

std::string write_vcd(const CircuitGraph& c, const std::vector<SignalTimeline>& tls,
                      std::uint64_t period) {
  if (tls.empty()) throw TraceError("vcd writer: no timelines");
  const std::uint64_t horizon = tls[0].horizon;
  std::map<std::string, const SignalTimeline*> by_ff;
  for (const auto& tl : tls) {
    if (tl.horizon != horizon) throw TraceError("vcd writer: timelines disagree on horizon");
    by_ff[tl.ff_name] = &tl;
  }

  const auto groups = bus_groups(c);

  // Variable layout: scalars (FF declaration order), then complete buses.
  struct OutVar {
    std::string id;
    std::string ref;
    std::vector<const SignalTimeline*> bits;  // MSB first
  };
  std::vector<OutVar> out_vars;
  std::size_t next_id = 0;
  auto timeline_for = [&](NodeId ff) -> const SignalTimeline* {
    auto it = by_ff.find(c.nodes[ff].name);
    if (it == by_ff.end())
      throw TraceError("vcd writer: no timeline for flip-flop '" + c.nodes[ff].name + "'");
    return it->second;
  };
  std::vector<std::string> emitted_bus;
  for (NodeId id : c.ffs) {
    const Node& nd = c.nodes[id];
    const bool vectored = nd.bus && groups.at(nd.bus->name).complete;
    if (!vectored) {
      out_vars.push_back({vcd_id(next_id++), nd.name, {timeline_for(id)}});
    } else if (std::find(emitted_bus.begin(), emitted_bus.end(), nd.bus->name) ==
               emitted_bus.end()) {
      emitted_bus.push_back(nd.bus->name);
      const BusGroup& g = groups.at(nd.bus->name);
      OutVar v{vcd_id(next_id++), g.name, {}};
      for (std::size_t b = g.bits.size(); b-- > 0;) v.bits.push_back(timeline_for(g.bits[b]));
      out_vars.push_back(std::move(v));
    }
  }

  // Expand timelines to per-cycle values lazily via transition cursors.
  struct Cursor {
    const SignalTimeline* tl;
    std::size_t next = 0;
    int value = 0;
  };
  std::vector<std::vector<Cursor>> cursors(out_vars.size());
  for (std::size_t v = 0; v < out_vars.size(); ++v)
    for (const SignalTimeline* tl : out_vars[v].bits) cursors[v].push_back({tl, 0, tl->initial});

  std::ostringstream out;
  out << "$timescale " << period << " ns $end\n";
  out << "$scope module " << c.name << " $end\n";
  for (const auto& v : out_vars) {
    if (v.bits.size() == 1) {
      out << "$var wire 1 " << v.id << " " << v.ref << " $end\n";
    } else {
      out << "$var wire " << v.bits.size() << " " << v.id << " " << v.ref << " ["
          << v.bits.size() - 1 << ":0] $end\n";
    }
  }
  out << "$upscope $end\n$enddefinitions $end\n";

  for (std::uint64_t cycle = 0; cycle < horizon; ++cycle) {
    std::string changes;
    for (std::size_t v = 0; v < out_vars.size(); ++v) {
      bool changed = cycle == 0;
      for (Cursor& cur : cursors[v]) {
        while (cur.next < cur.tl->transitions.size() &&
               cur.tl->transitions[cur.next].first == cycle) {
          cur.value = cur.tl->transitions[cur.next].second;
          cur.next++;
          changed = true;
        }
      }
      if (!changed) continue;
      if (cursors[v].size() == 1) {
        changes += std::to_string(cursors[v][0].value) + out_vars[v].id + "\n";
      } else {
        changes += "b";
        for (const Cursor& cur : cursors[v]) changes += static_cast<char>('0' + cur.value);
        changes += " " + out_vars[v].id + "\n";
      }
    }
    if (cycle == 0) {
      out << "#0\n$dumpvars\n" << changes << "$end\n";
    } else if (!changes.empty()) {
      out << "#" << cycle * period << "\n" << changes;
    }
  }
  out << "#" << horizon * period << "\n";
  return out.str();
}

}  // namespace ffc
