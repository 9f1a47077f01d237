#pragma once

#include "ffc/error.hpp"
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ffc/circuit.hpp"
#include "ffc/faultsim.hpp"

namespace ffc {

class BenchError : public Error {
 public:
  using Error::Error;
};

enum class BlockKind { ShiftChain, Counter, Ring, CrcLike, FifoLike, DeadLogic };

std::string_view block_kind_name(BlockKind k);

struct BenchSpec {
  std::uint64_t seed = 1;
  std::uint32_t n_blocks = 8;
  std::vector<BlockKind> kinds;  // allowed kinds; empty = all
  std::uint32_t block_ff_min = 4;
  std::uint32_t block_ff_max = 24;
  double bus_fraction = 0.5;  // chance a block's FFs are declared as one bus
  std::uint64_t horizon = 1024;
};

struct BlockGroundTruth {
  std::uint32_t block_id = 0;
  BlockKind kind = BlockKind::DeadLogic;
  std::vector<std::string> ff_names;
  // Designed sensitivity class: 0 = dead, 1 = transient (fault shifts out
  // once), 2 = persistent (fault recirculates until observed).
  int rank = 0;
};

struct BenchOutput {
  CircuitGraph circuit;
  Workload workload;
  std::vector<BlockGroundTruth> blocks;
};

// Deterministic per seed. Observable blocks drive their own primary output
// plus a shared OR output; dead_logic blocks have no path to any output.
BenchOutput generate(const BenchSpec& spec);

// The designed qualitative ordering (same plan the generator uses), without
// building the circuit.
std::vector<BlockGroundTruth> expected_structure(const BenchSpec& spec);

std::string blocks_csv(const std::vector<BlockGroundTruth>& blocks);

}  // namespace ffc
