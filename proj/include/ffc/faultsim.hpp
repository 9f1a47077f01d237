#pragma once

#include "ffc/error.hpp"
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ffc/circuit.hpp"
#include "ffc/trace.hpp"

namespace ffc {

class SimError : public Error {
 public:
  using Error::Error;
};

struct Stimulus {
  enum class Kind { Table, Random } kind = Kind::Random;
  std::vector<std::vector<int>> rows;  // Table: rows[cycle][pi], PI declaration order
  std::uint64_t seed = 0;              // Random
  double bias = 0.5;                   // Random: P(bit == 1)
};

struct Workload {
  std::string name;
  std::uint64_t horizon = 0;
  std::uint64_t window_start = 0;  // injection window [start, end)
  std::uint64_t window_end = 0;
  Stimulus stimulus;
  bool monitor_all = true;                      // no "monitored_outputs" key given
  std::vector<std::string> monitored_outputs;  // used when monitor_all is false
};

Workload parse_workload(const std::string& text);
std::string serialize_workload(const Workload& w);
Workload load_workload_file(const std::string& path);

// Fault-free reference run. FF rows follow circuit.ffs order, PO rows
// circuit.pos order.
struct GoldenRun {
  std::uint64_t horizon = 0;
  std::size_t n_ff = 0, n_po = 0;
  std::vector<std::uint8_t> ff_states;  // horizon x n_ff
  std::vector<std::uint8_t> po_values;  // horizon x n_po

  std::uint8_t ff_at(std::uint64_t cycle, std::size_t ff) const {
    return ff_states[cycle * n_ff + ff];
  }
  std::uint8_t po_at(std::uint64_t cycle, std::size_t po) const {
    return po_values[cycle * n_po + po];
  }
  // Per-FF output histories, sorted by FF name.
  std::vector<SignalTimeline> timelines(const CircuitGraph& c) const;
};

enum class Outcome { NoEffect, FunctionalFailure };

struct FailureVerdict {
  std::string ff_name;
  std::uint64_t cycle = 0;
  Outcome outcome = Outcome::NoEffect;
  std::optional<std::uint64_t> first_divergence;  // first cycle a monitored PO differs
};

struct TargetSpec {
  std::string name;
  std::vector<NodeId> ffs;  // nonempty; campaign samples members uniformly
};

enum class Granularity { PerFF, PerCluster };

struct TargetResult {
  std::string target;
  std::uint64_t injections = 0;
  std::uint64_t failures = 0;
  double rate = 0.0;  // failures / injections
};

struct CampaignResult {
  Granularity granularity = Granularity::PerFF;
  std::string circuit;
  std::string workload;
  std::uint64_t seed = 0;
  std::uint64_t n_per_target = 0;
  std::vector<TargetResult> targets;

  std::uint64_t total_injections() const;
  std::uint64_t total_failures() const;
  double overall_rate() const;  // total failures / total injections
};

std::string campaign_csv(const CampaignResult& r);
// Reads target/injections/failures rows back; rate is recomputed as f/n.
std::vector<TargetResult> parse_campaign_csv(const std::string& text);

// Binds a circuit to a workload: resolves the stimulus table and monitored
// outputs, runs the golden simulation once, and serves injections.
class Simulator {
 public:
  Simulator(const CircuitGraph& c, const Workload& w);

  const CircuitGraph& circuit() const { return *c_; }
  const Workload& workload() const { return w_; }
  const GoldenRun& golden() const { return golden_; }

  // True if a structural path (combinational or through FFs) leads from the
  // node to a monitored PO; faults in unobservable FFs cannot fail.
  bool observable(NodeId id) const { return observable_[id] != 0; }

  // Flips `ff` right after the clock edge of `cycle` and re-simulates to the
  // horizon, comparing monitored POs against the golden run.
  FailureVerdict inject_seu(NodeId ff, std::uint64_t cycle) const;

  // Exact failure rate: one injection per window cycle.
  double exhaustive_rate(NodeId ff, int threads = 1) const;

  CampaignResult run_campaign(Granularity granularity, const std::vector<TargetSpec>& targets,
                              std::uint64_t n_per_target, std::uint64_t seed,
                              int threads = 1) const;

 private:
  void init_constants(std::vector<std::uint8_t>& value) const;
  void eval_combinational(std::vector<std::uint8_t>& value) const;

  const CircuitGraph* c_;
  Workload w_;
  std::vector<std::uint8_t> stim_;         // horizon x n_pi
  std::vector<std::size_t> monitored_;     // indices into c_->pos
  std::vector<std::uint8_t> observable_;   // per node id
  std::vector<std::size_t> ff_index_;      // node id -> position in c_->ffs
  std::vector<NodeId> const_ids_;
  GoldenRun golden_;
};

}  // namespace ffc
