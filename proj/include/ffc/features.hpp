#pragma once

#include "ffc/error.hpp"
#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ffc/circuit.hpp"
#include "ffc/trace.hpp"

namespace ffc {

class FeatureError : public Error {
 public:
  using Error::Error;
};

constexpr std::size_t kFeatureCount = 20;

// Canonical column order of the feature matrix.
enum class Feat : std::size_t {
  FfStartpoint = 0,   // FFs directly driving this FF
  FfEndpoint,         // FFs directly driven by this FF
  ConnFromFf,         // FFs that reach this FF (transitive)
  ConnToFf,           // FFs reachable from this FF (transitive)
  ConnFromPi,         // PIs that reach this FF
  ConnToPo,           // POs reachable from this FF
  StagesFromPiMax,
  StagesFromPiAvg,
  StagesFromPiMin,
  StagesToPoMax,
  StagesToPoAvg,
  StagesToPoMin,
  FeedbackDepth,      // shortest cycle through the FF, in edges
  BusPosition,
  BusLength,
  BusLabel,
  ModuleLabel,
  FracAt0,
  FracAt1,
  StateChanges,
};

extern const std::array<const char*, kFeatureCount> kFeatureNames;

struct FeatureMatrix {
  std::vector<std::string> ff_names;  // row keys, ascending
  std::vector<double> data;           // rows() x kFeatureCount, row-major
  bool standardized = false;
  std::vector<double> col_mean, col_std;  // filled by standardize()

  std::size_t rows() const { return ff_names.size(); }
  const double* row(std::size_t i) const { return &data[i * kFeatureCount]; }
  double* row(std::size_t i) { return &data[i * kFeatureCount]; }
  double at(std::size_t i, Feat f) const { return data[i * kFeatureCount + static_cast<std::size_t>(f)]; }
};

// Unreachable distances and absent feedback loops take the finite sentinel
// N_FF + 1, larger than any realizable path.
std::uint64_t distance_sentinel(const FFDependencyGraph& g);

// Distinct FF predecessors / successors (self-loop counts once on each side).
std::pair<std::uint64_t, std::uint64_t> direct_ff_degree(const FFDependencyGraph& g, NodeId ff);

// Distinct FFs that reach ff / are reachable from ff via >= 1 edge; ff
// itself counts iff it lies on a cycle through itself.
std::pair<std::uint64_t, std::uint64_t> transitive_ff_connections(const FFDependencyGraph& g,
                                                                  NodeId ff);

// Distinct PIs that reach ff / POs reachable from ff, any path length.
std::pair<std::uint64_t, std::uint64_t> pi_po_connections(const FFDependencyGraph& g, NodeId ff);

struct StageStats {
  double from_pi_max, from_pi_avg, from_pi_min;
  double to_po_max, to_po_avg, to_po_min;
};

// Shortest-path hop counts: a PI feeding the FF through pure combinational
// logic is 1 stage, each further FF stage adds 1. Aggregated over distinct
// reaching PIs (symmetrically POs); unreachable side -> sentinel.
StageStats stage_distance_stats(const FFDependencyGraph& g, NodeId ff);

// Edge count of the shortest directed cycle through ff; self-loop -> 1,
// no cycle -> sentinel.
std::uint64_t feedback_depth(const FFDependencyGraph& g, NodeId ff);

struct BusModuleFeatures {
  std::uint64_t bus_position;
  std::uint64_t bus_length;
  std::uint64_t bus_label;
  std::uint64_t module_label;
};

// Label encoding: buses ranked by name lexicographically; scalar FFs get
// distinct labels after all buses, in FF-name order. Modules ranked by
// joined hierarchy path.
BusModuleFeatures bus_and_module_features(const CircuitGraph& c, NodeId ff);

// Raw feature matrix: structural features from the dependency graph plus
// the activity columns, one row per FF in sorted-name order.
FeatureMatrix assemble(const CircuitGraph& c, const FFDependencyGraph& g,
                       const std::vector<ActivityStats>& activity);

// Per-column z-scoring with population std; zero-variance columns map to
// all zeros. Idempotent up to rounding.
FeatureMatrix standardize(const FeatureMatrix& m);

std::string features_csv(const FeatureMatrix& m);
FeatureMatrix parse_features_csv(const std::string& text);

}  // namespace ffc
