#pragma once

#include "ffc/error.hpp"
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ffc/features.hpp"

namespace ffc {

class ClusterError : public Error {
 public:
  using Error::Error;
};

enum class Algorithm { KMeans, Agglomerative, MeanShift };

std::string_view algorithm_name(Algorithm a);

// FF -> cluster assignment. Cluster ids are dense (0..n_clusters-1, none
// empty) and canonical: clusters are numbered by their first member in row
// order, so identical partitions get identical labels.
struct Clustering {
  std::vector<std::string> ff_names;      // row keys of the source matrix
  std::vector<std::uint32_t> assignment;  // per row
  std::uint32_t n_clusters = 0;
  Algorithm algorithm = Algorithm::KMeans;
  std::string params_json;  // parameter record for the sidecar
  std::uint64_t seed = 0;

  std::vector<std::vector<std::uint32_t>> members() const;  // per cluster, row indices
};

struct KMeansParams {
  std::uint32_t k = 0;
  std::uint64_t seed = 0;
  std::uint32_t max_iter = 300;
  std::uint32_t n_restarts = 10;
  double tol = 1e-6;  // relative inertia improvement
  int threads = 1;
};

// Lloyd iterations from k-means++ seeding; best of n_restarts by inertia.
// Empty clusters are reseeded at the point farthest from its own centroid.
Clustering kmeans(const FeatureMatrix& m, const KMeansParams& p);

struct AggloParams {
  std::uint32_t k = 0;
  int threads = 1;
};

// Bottom-up complete-linkage merging under the L1 metric. Ties on merge
// distance break toward the smallest (min cluster id, then second id).
Clustering agglomerative(const FeatureMatrix& m, const AggloParams& p);

struct MeanShiftParams {
  double bandwidth = 0.0;
  std::uint32_t max_iter = 300;
  double shift_tol = 1e-6;
  int threads = 1;
};

// Flat-kernel mean shift under L2, one window seeded per point. Converged
// centers closer than the bandwidth merge into the one whose window held
// more points (ties to the lower seed index). When centers_out is given it
// receives the surviving centers, n_clusters x kFeatureCount in cluster-id
// order.
Clustering mean_shift(const FeatureMatrix& m, const MeanShiftParams& p,
                      std::vector<double>* centers_out = nullptr);

struct BandwidthPick {
  double bandwidth = 0.0;
  std::uint32_t n_clusters = 0;
  bool on_target = false;  // cleared when bisection only got close
};

// Bisects the bandwidth toward a target cluster count (N_c is non-increasing
// in w in practice); returns the best evaluated w if the target is never hit.
BandwidthPick pick_bandwidth(const FeatureMatrix& m, std::uint32_t target_nc, double w_lo,
                             double w_hi, const MeanShiftParams& base);

// Nearest-integer cluster count for a target fraction of the FF count, at
// least 1.
std::uint32_t target_count(std::size_t n_ff, double fraction);

struct TargetCounts {
  std::uint32_t pct5, pct10, pct20;
};
TargetCounts target_counts(std::size_t n_ff);

std::string clusters_csv(const Clustering& cl);
Clustering parse_clusters_csv(const std::string& text);
std::string clustering_sidecar_json(const Clustering& cl);

}  // namespace ffc
