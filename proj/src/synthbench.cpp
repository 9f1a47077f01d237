#include "ffc/synthbench.hpp"

#include <algorithm>

#include "ffc/rng.hpp"

namespace ffc {

std::string_view block_kind_name(BlockKind k) {
  switch (k) {
    case BlockKind::ShiftChain: return "shift_chain";
    case BlockKind::Counter: return "counter";
    case BlockKind::Ring: return "ring";
    case BlockKind::CrcLike: return "crc_like";
    case BlockKind::FifoLike: return "fifo_like";
    case BlockKind::DeadLogic: return "dead_logic";
  }
  return "?";
}

namespace {

constexpr std::uint32_t kMinTotalFf = 20;
constexpr std::uint32_t kMaxTotalFf = 2000;

int kind_rank(BlockKind k) {
  switch (k) {
    case BlockKind::DeadLogic: return 0;
    case BlockKind::ShiftChain:
    case BlockKind::FifoLike: return 1;
    default: return 2;  // feedback keeps the error alive
  }
}

bool kind_observable(BlockKind k) { return k != BlockKind::DeadLogic; }

struct BlockPlan {
  BlockKind kind;
  std::uint32_t size;
  bool as_bus;
  std::uint32_t data_pi;   // index into data PIs
  std::uint32_t gate_pis;  // AND this many gate PIs in front of the output (0 = ungated)
};

std::vector<BlockPlan> plan_blocks(const BenchSpec& spec, Rng& rng) {
  if (spec.n_blocks < 1) throw BenchError("bench: need at least one block");
  if (spec.block_ff_min < 2 || spec.block_ff_min > spec.block_ff_max)
    throw BenchError("bench: bad per-block FF range");

  std::vector<BlockKind> kinds = spec.kinds;
  if (kinds.empty())
    kinds = {BlockKind::ShiftChain, BlockKind::Counter, BlockKind::Ring,
             BlockKind::CrcLike,    BlockKind::FifoLike, BlockKind::DeadLogic};

  std::vector<BlockPlan> plans(spec.n_blocks);
  const std::vector<BlockKind> observable = [&] {
    std::vector<BlockKind> v;
    for (BlockKind k : kinds)
      if (kind_observable(k)) v.push_back(k);
    return v;
  }();

  for (std::uint32_t b = 0; b < spec.n_blocks; ++b) {
    BlockPlan& p = plans[b];
    if (spec.n_blocks >= 2 && b == 0) {
      if (observable.empty()) throw BenchError("bench: no observable block kind allowed");
      p.kind = observable[rng.below(observable.size())];
    } else if (spec.n_blocks >= 2 && b == 1) {
      p.kind = BlockKind::DeadLogic;
    } else {
      p.kind = kinds[rng.below(kinds.size())];
    }
    p.size = spec.block_ff_min +
             static_cast<std::uint32_t>(rng.below(spec.block_ff_max - spec.block_ff_min + 1));
    if (p.kind == BlockKind::Counter) p.size = std::min<std::uint32_t>(p.size, 8);
    p.as_bus = rng.unit() < spec.bus_fraction;
    p.data_pi = static_cast<std::uint32_t>(rng.below(4));
    // Persistent blocks stay near rate 1 even when gated; transient blocks
    // get duty 1/2 .. 1/8 so rates spread across blocks.
    p.gate_pis = kind_rank(p.kind) == 2 ? static_cast<std::uint32_t>(rng.below(2))
                                        : 1 + static_cast<std::uint32_t>(rng.below(3));
  }

  std::uint64_t total = 0;
  for (const auto& p : plans) total += p.size;
  std::uint32_t stalled = 0;
  for (std::uint32_t b = 0; total < kMinTotalFf; b = (b + 1) % spec.n_blocks) {
    if (plans[b].kind == BlockKind::Counter && plans[b].size >= 8) {
      if (++stalled >= spec.n_blocks)
        throw BenchError("bench: spec cannot reach " + std::to_string(kMinTotalFf) + " FFs");
      continue;
    }
    stalled = 0;
    ++plans[b].size;
    ++total;
  }
  if (total > kMaxTotalFf)
    throw BenchError("bench: spec yields " + std::to_string(total) + " FFs, limit is " +
                     std::to_string(kMaxTotalFf));
  return plans;
}

// Thin builder over CircuitGraph: two-phase so FF feedback can be wired
// after all FFs exist.
struct Builder {
  CircuitGraph c;

  NodeId add(NodeKind kind, std::string name) {
    Node nd;
    nd.id = static_cast<NodeId>(c.nodes.size());
    nd.kind = kind;
    nd.name = std::move(name);
    c.nodes.push_back(std::move(nd));
    return c.nodes.back().id;
  }
  NodeId pi(std::string name) { return add(NodeKind::PrimaryInput, std::move(name)); }
  NodeId po(std::string name, NodeId driver) {
    const NodeId id = add(NodeKind::PrimaryOutput, std::move(name));
    c.nodes[id].fanin = {driver};
    return id;
  }
  NodeId ff(std::string name, int reset, std::vector<std::string> module_path,
            std::optional<BusRef> bus) {
    const NodeId id = add(NodeKind::FlipFlop, std::move(name));
    c.nodes[id].reset_value = reset;
    c.nodes[id].module_path = std::move(module_path);
    c.nodes[id].bus = std::move(bus);
    c.nodes[id].fanin = {kNoNode};
    return id;
  }
  void set_d(NodeId ff, NodeId driver) { c.nodes[ff].fanin[0] = driver; }
  NodeId gate(std::string name, GateFn fn, std::vector<NodeId> pins) {
    const NodeId id = add(NodeKind::Gate, std::move(name));
    c.nodes[id].fn = fn;
    c.nodes[id].fanin = std::move(pins);
    return id;
  }
  // Balanced 2-input tree; returns inputs[0] when there is only one.
  NodeId tree(GateFn fn, std::vector<NodeId> inputs, const std::string& prefix) {
    int level = 0;
    while (inputs.size() > 1) {
      std::vector<NodeId> next;
      for (std::size_t i = 0; i + 1 < inputs.size(); i += 2) {
        next.push_back(gate(prefix + "_t" + std::to_string(level) + "_" + std::to_string(i / 2),
                            fn, {inputs[i], inputs[i + 1]}));
      }
      if (inputs.size() % 2) next.push_back(inputs.back());
      inputs = std::move(next);
      ++level;
    }
    return inputs[0];
  }
};

}  // namespace

std::vector<BlockGroundTruth> expected_structure(const BenchSpec& spec) {
  Rng rng(mix_seed(spec.seed, 0x62656e63));  // same stream the generator uses
  const auto plans = plan_blocks(spec, rng);
  std::vector<BlockGroundTruth> out(plans.size());
  for (std::uint32_t b = 0; b < plans.size(); ++b) {
    out[b].block_id = b;
    out[b].kind = plans[b].kind;
    out[b].rank = kind_rank(plans[b].kind);
    const std::string base = "b" + std::to_string(b);
    for (std::uint32_t i = 0; i < plans[b].size; ++i)
      out[b].ff_names.push_back(base + "_r" + std::to_string(i));
  }
  return out;
}

BenchOutput generate(const BenchSpec& spec) {
  Rng rng(mix_seed(spec.seed, 0x62656e63));
  const auto plans = plan_blocks(spec, rng);

  Builder bld;
  bld.c.name = "bench_" + std::to_string(spec.seed);

  std::vector<NodeId> data_pis, gate_pis;
  for (int i = 0; i < 4; ++i) data_pis.push_back(bld.pi("pi_d" + std::to_string(i)));
  for (int i = 0; i < 3; ++i) gate_pis.push_back(bld.pi("pi_g" + std::to_string(i)));

  BenchOutput out;
  std::vector<NodeId> block_outputs;  // gated observable taps

  for (std::uint32_t b = 0; b < plans.size(); ++b) {
    const BlockPlan& p = plans[b];
    const std::string base = "b" + std::to_string(b);
    const std::string kind_str(block_kind_name(p.kind));
    const std::vector<std::string> module{"top", kind_str + std::to_string(b)};

    BlockGroundTruth gt;
    gt.block_id = b;
    gt.kind = p.kind;
    gt.rank = kind_rank(p.kind);

    std::vector<NodeId> regs;
    for (std::uint32_t i = 0; i < p.size; ++i) {
      std::optional<BusRef> bus;
      if (p.as_bus) bus = BusRef{base + "_bus", i};
      const int reset = (p.kind == BlockKind::Ring && i == 0) ? 1 : 0;
      const std::string name = base + "_r" + std::to_string(i);
      regs.push_back(bld.ff(name, reset, module, bus));
      gt.ff_names.push_back(name);
    }

    const NodeId data = data_pis[p.data_pi];
    const std::uint32_t L = p.size;
    NodeId tap = kNoNode;

    switch (p.kind) {
      case BlockKind::ShiftChain:
        bld.set_d(regs[0], data);
        for (std::uint32_t i = 1; i < L; ++i) bld.set_d(regs[i], regs[i - 1]);
        tap = regs[L - 1];
        break;
      case BlockKind::Counter: {
        // Ripple-carry increment: bit0 toggles, carry chains upward.
        bld.set_d(regs[0], bld.gate(base + "_n0", GateFn::Not, {regs[0]}));
        NodeId carry = regs[0];
        for (std::uint32_t i = 1; i < L; ++i) {
          bld.set_d(regs[i], bld.gate(base + "_x" + std::to_string(i), GateFn::Xor,
                                      {regs[i], carry}));
          if (i + 1 < L)
            carry = bld.gate(base + "_c" + std::to_string(i), GateFn::And, {carry, regs[i]});
        }
        tap = regs[L - 1];
        break;
      }
      case BlockKind::Ring:
        for (std::uint32_t i = 0; i < L; ++i) bld.set_d(regs[i], regs[(i + L - 1) % L]);
        tap = regs[0];
        break;
      case BlockKind::CrcLike: {
        bld.set_d(regs[0], bld.gate(base + "_fb", GateFn::Xor, {regs[L - 1], data}));
        for (std::uint32_t i = 1; i < L; ++i) {
          if (i % 3 == 0) {
            bld.set_d(regs[i], bld.gate(base + "_x" + std::to_string(i), GateFn::Xor,
                                        {regs[i - 1], regs[L - 1]}));
          } else {
            bld.set_d(regs[i], regs[i - 1]);
          }
        }
        tap = L >= 2 ? bld.gate(base + "_out", GateFn::Xor, {regs[L - 1], regs[L / 2]})
                     : regs[0];
        break;
      }
      case BlockKind::FifoLike: {
        // MUX2 {sel, hold, shift}: en high shifts, low holds.
        const NodeId en = gate_pis[b % gate_pis.size()];
        bld.set_d(regs[0], bld.gate(base + "_m0", GateFn::Mux2, {en, regs[0], data}));
        for (std::uint32_t i = 1; i < L; ++i)
          bld.set_d(regs[i], bld.gate(base + "_m" + std::to_string(i), GateFn::Mux2,
                                      {en, regs[i], regs[i - 1]}));
        tap = regs[L - 1];
        break;
      }
      case BlockKind::DeadLogic:
        // A ring that drives nothing: the fault persists but can never fail.
        for (std::uint32_t i = 0; i < L; ++i)
          bld.set_d(regs[i], i == 0 ? bld.gate(base + "_fb", GateFn::Xor, {regs[L - 1], data})
                                    : static_cast<NodeId>(regs[i - 1]));
        tap = kNoNode;
        break;
    }

    if (tap != kNoNode) {
      NodeId obs = tap;
      if (p.gate_pis > 0) {
        std::vector<NodeId> ins{tap};
        for (std::uint32_t gi = 0; gi < p.gate_pis; ++gi)
          ins.push_back(gate_pis[(b + gi) % gate_pis.size()]);
        obs = bld.tree(GateFn::And, ins, base + "_gate");
      }
      bld.po("po_b" + std::to_string(b), obs);
      block_outputs.push_back(obs);
    }
    out.blocks.push_back(std::move(gt));
  }

  if (block_outputs.size() > 1)
    bld.po("po_any", bld.tree(GateFn::Or, block_outputs, "any"));

  bld.c.finalize();
  out.circuit = std::move(bld.c);

  out.workload.name = "bench_" + std::to_string(spec.seed) + "_wl";
  out.workload.horizon = spec.horizon;
  out.workload.window_start = 0;
  out.workload.window_end = spec.horizon;
  out.workload.stimulus.kind = Stimulus::Kind::Random;
  out.workload.stimulus.seed = mix_seed(spec.seed, 0x7374696d);
  out.workload.stimulus.bias = 0.5;
  out.workload.monitor_all = true;
  return out;
}

std::string blocks_csv(const std::vector<BlockGroundTruth>& blocks) {
  std::string out = "ff_name,block_id,block_kind\n";
  for (const auto& b : blocks)
    for (const auto& name : b.ff_names)
      out += name + "," + std::to_string(b.block_id) + "," +
             std::string(block_kind_name(b.kind)) + "\n";
  return out;
}

}  // namespace ffc
