#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <map>

#include "doctest.h"
#include "ffc/synthbench.hpp"

using namespace ffc;

TEST_CASE("generated benches are valid, in range, and deterministic") {
  for (std::uint64_t seed : {1ull, 7ull, 42ull, 1234ull}) {
    BenchSpec spec;
    spec.seed = seed;
    spec.n_blocks = 6;
    spec.horizon = 256;
    const BenchOutput a = generate(spec);
    CHECK(validate(a.circuit).empty());
    CHECK(a.circuit.ff_count() >= 20);
    CHECK(a.circuit.ff_count() <= 2000);

    const BenchOutput b = generate(spec);
    CHECK(serialize_netlist(a.circuit) == serialize_netlist(b.circuit));
    CHECK(serialize_workload(a.workload) == serialize_workload(b.workload));
    CHECK(blocks_csv(a.blocks) == blocks_csv(b.blocks));

    // One observable and one dead block guaranteed for n_blocks >= 2.
    bool has_dead = false, has_obs = false;
    for (const auto& blk : a.blocks) {
      if (blk.kind == BlockKind::DeadLogic) has_dead = true;
      else has_obs = true;
    }
    CHECK(has_dead);
    CHECK(has_obs);

    // Ground truth covers every FF exactly once.
    std::map<std::string, int> seen;
    for (const auto& blk : a.blocks)
      for (const auto& name : blk.ff_names) seen[name]++;
    CHECK(seen.size() == a.circuit.ff_count());
    for (const auto& [name, cnt] : seen) {
      CHECK(cnt == 1);
      CHECK_NOTHROW(a.circuit.id_of(name));
    }
  }
}

TEST_CASE("single shift chain: every FF observable") {
  BenchSpec spec;
  spec.seed = 3;
  spec.n_blocks = 1;
  spec.kinds = {BlockKind::ShiftChain};
  spec.block_ff_min = 20;
  spec.block_ff_max = 20;
  spec.horizon = 128;
  const BenchOutput bench = generate(spec);
  CHECK(bench.circuit.ff_count() == 20);
  const Simulator sim(bench.circuit, bench.workload);
  for (NodeId ff : bench.circuit.ffs) CHECK(sim.observable(ff));
}

TEST_CASE("dead-only bench: every campaign rate is zero") {
  BenchSpec spec;
  spec.seed = 9;
  spec.n_blocks = 1;
  spec.kinds = {BlockKind::DeadLogic};
  spec.block_ff_min = 20;
  spec.block_ff_max = 24;
  spec.horizon = 128;
  const BenchOutput bench = generate(spec);
  const Simulator sim(bench.circuit, bench.workload);
  std::vector<TargetSpec> targets;
  for (NodeId ff : bench.circuit.ffs)
    targets.push_back({bench.circuit.nodes[ff].name, {ff}});
  const CampaignResult r = sim.run_campaign(Granularity::PerFF, targets, 20, 5);
  for (const auto& t : r.targets) CHECK(t.rate == 0.0);
  for (NodeId ff : bench.circuit.ffs) CHECK(sim.exhaustive_rate(ff) == 0.0);
}

TEST_CASE("designed sensitivity ranks hold on a mixed fixture") {
  BenchSpec spec;
  spec.seed = 21;
  spec.n_blocks = 4;
  spec.kinds = {BlockKind::ShiftChain, BlockKind::Ring};
  spec.block_ff_min = 5;
  spec.block_ff_max = 8;
  spec.horizon = 384;
  const BenchOutput bench = generate(spec);
  const Simulator sim(bench.circuit, bench.workload);

  std::map<int, std::pair<double, std::size_t>> by_rank;  // rank -> (rate sum, n)
  for (const auto& blk : bench.blocks) {
    for (const auto& name : blk.ff_names) {
      const double rate = sim.exhaustive_rate(bench.circuit.id_of(name), 2);
      by_rank[blk.rank].first += rate;
      by_rank[blk.rank].second += 1;
      if (blk.rank == 0) CHECK(rate == 0.0);
    }
  }
  REQUIRE(by_rank.count(0));  // dead block forced in
  REQUIRE(by_rank.count(1));
  REQUIRE(by_rank.count(2));
  const double transient = by_rank[1].first / double(by_rank[1].second);
  const double persistent = by_rank[2].first / double(by_rank[2].second);
  CHECK(persistent > transient);
  CHECK(transient > 0.0);

  const auto structure = expected_structure(spec);
  REQUIRE(structure.size() == bench.blocks.size());
  for (std::size_t b = 0; b < structure.size(); ++b) {
    CHECK(structure[b].kind == bench.blocks[b].kind);
    CHECK(structure[b].rank == bench.blocks[b].rank);
    CHECK(structure[b].ff_names == bench.blocks[b].ff_names);
  }
}

TEST_CASE("single-block structure is the trivial ordering") {
  BenchSpec spec;
  spec.seed = 4;
  spec.n_blocks = 1;
  spec.kinds = {BlockKind::CrcLike};
  spec.block_ff_min = 20;
  spec.block_ff_max = 24;
  const auto structure = expected_structure(spec);
  REQUIRE(structure.size() == 1);
  CHECK(structure[0].kind == BlockKind::CrcLike);
  CHECK(structure[0].rank == 2);
}

TEST_CASE("infeasible specs are rejected") {
  BenchSpec spec;
  spec.n_blocks = 0;
  CHECK_THROWS_AS(generate(spec), BenchError);

  spec.n_blocks = 200;
  spec.block_ff_min = 20;
  spec.block_ff_max = 24;
  CHECK_THROWS_AS(generate(spec), BenchError);  // > 2000 FFs

  spec = BenchSpec{};
  spec.block_ff_min = 1;
  spec.block_ff_max = 0;
  CHECK_THROWS_AS(generate(spec), BenchError);

  // A lone counter block saturates at 8 bits, short of the 20-FF floor.
  spec = BenchSpec{};
  spec.n_blocks = 1;
  spec.kinds = {BlockKind::Counter};
  spec.block_ff_min = 4;
  spec.block_ff_max = 4;
  CHECK_THROWS_AS(generate(spec), BenchError);
}

TEST_CASE("blocks csv shape") {
  BenchSpec spec;
  spec.seed = 2;
  spec.n_blocks = 3;
  spec.horizon = 64;
  const BenchOutput bench = generate(spec);
  const std::string csv = blocks_csv(bench.blocks);
  CHECK(csv.rfind("ff_name,block_id,block_kind\n", 0) == 0);
  CHECK(csv.find("dead_logic") != std::string::npos);
}
