#pragma once

#include "ffc/error.hpp"
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ffc/cluster.hpp"
#include "ffc/faultsim.hpp"
#include "ffc/features.hpp"

namespace ffc {

class EvalError : public Error {
 public:
  using Error::Error;
};

// Per-FF failure rates keyed like the feature matrix (names ascending).
struct RateTable {
  std::vector<std::string> ff_names;
  std::vector<double> rates;

  double total() const;
  double rate_of(const std::string& ff) const;
};

// From a per-FF campaign (target column holds FF names).
RateTable rates_from_campaign(const std::vector<TargetResult>& per_ff);

// Unweighted mean of member rates per cluster (members all received the
// same injection count, so this equals the pooled ratio).
std::vector<double> cluster_rates(const Clustering& cl, const RateTable& per_ff);

// Residual normalized sensitivity after protecting the first m FFs of an
// order; one point per FF, from (0, 1) to (1, 0).
struct MitigationCurve {
  std::string strategy;
  std::vector<double> fractions;
  std::vector<double> residuals;
  bool all_zero = false;  // set when every rate is zero (flat curve at 0)
};

MitigationCurve mitigation_curve(const std::vector<std::string>& order, const RateTable& rates,
                                 std::string strategy);

// FFs by rate descending, ties by name ascending.
std::vector<std::string> ideal_order(const RateTable& rates);

// Cluster-by-cluster: clusters by rate descending (ties by cluster id),
// members in name order.
std::vector<std::string> clustered_order(const Clustering& cl, const RateTable& rates);

// Mean residual per protected-count over seeded random orders.
MitigationCurve random_baseline(const RateTable& rates, std::uint32_t n_runs, std::uint64_t seed);

struct VarMetrics {
  double mean_var = 0.0;      // mean over clusters of member-rate variance
  double weighted_var = 0.0;  // (1/N_c) * sum size_c * var_c
  double max_diff = 0.0;      // max over clusters of (max - min member rate)
};

VarMetrics quality_metrics(const Clustering& cl, const RateTable& rates);

// Davies-Bouldin index in feature space (L2); requires >= 2 clusters and
// distinct centroids. 0 is the best possible score.
double davies_bouldin(const FeatureMatrix& m, const Clustering& cl);

struct QualityReport {
  std::uint32_t n_clusters = 0;
  double mean_size = 0.0;
  double std_size = 0.0;
  VarMetrics var;
  bool has_db = false;
  double db = 0.0;
};

QualityReport quality_report(const FeatureMatrix& m, const Clustering& cl,
                             const RateTable& rates);

// Signed trapezoidal area between two curves (a minus b) over fraction in
// [0, 1], after resampling both onto the union of their fraction grids.
double curve_gap(const MitigationCurve& a, const MitigationCurve& b);

std::string curves_csv(const std::vector<MitigationCurve>& curves);
std::vector<MitigationCurve> parse_curves_csv(const std::string& text);
std::string quality_json(const QualityReport& q);

}  // namespace ffc
