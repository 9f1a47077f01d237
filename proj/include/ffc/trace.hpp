#pragma once

#include "ffc/error.hpp"
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ffc/circuit.hpp"

namespace ffc {

class TraceError : public Error {
 public:
  using Error::Error;
};

// Per-cycle history of one FF output. The value during cycle c is the value
// after the clock edge at c; transition cycles are >= 1, strictly
// increasing, < horizon, and consecutive transition values alternate.
struct SignalTimeline {
  std::string ff_name;
  int initial = 0;
  std::vector<std::pair<std::uint64_t, int>> transitions;  // (cycle, new value)
  std::uint64_t horizon = 0;
};

struct ActivityStats {
  std::string ff_name;
  double frac_at_0 = 0.0;
  double frac_at_1 = 0.0;
  std::uint64_t state_changes = 0;
};

ActivityStats compute_activity(const SignalTimeline& tl);

// Same over the cycle window [start, end); transitions strictly inside the
// window count as state changes.
ActivityStats compute_activity_window(const SignalTimeline& tl, std::uint64_t start,
                                      std::uint64_t end);

struct VcdResult {
  std::vector<SignalTimeline> timelines;  // sorted by ff_name
  std::vector<std::string> warnings;      // e.g. mapped paths missing from the VCD
};

// Parses the two-valued VCD subset. name_map maps a VCD signal path
// ("scope.sig" or "scope.bus[3]") to an FF name; one timeline per mapped
// path. Times are divided by the cycle period: the $timescale magnitude, or
// period_override when nonzero.
VcdResult parse_vcd(const std::string& text, const std::map<std::string, std::string>& name_map,
                    std::uint64_t period_override = 0);

// Emits the same subset. FFs whose bus bits form a complete 0..len-1 range
// are written as one vector variable; everything else as scalars. The final
// timestamp marks the horizon.
std::string write_vcd(const CircuitGraph& c, const std::vector<SignalTimeline>& tls,
                      std::uint64_t period = 10);

// The writer's signal path for an FF ("<circuit>.<name>" or
// "<circuit>.<bus>[i]"); identity name_map entries for round trips.
std::map<std::string, std::string> vcd_name_map(const CircuitGraph& c);

}  // namespace ffc
