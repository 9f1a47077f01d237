#include "ffc/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "ffc/io.hpp"
#include "ffc/kernels.hpp"
#include "ffc/parallel.hpp"
#include "ffc/rng.hpp"
#include "json.hpp"

namespace ffc {

using nlohmann::json;

std::string_view algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::KMeans: return "kmeans";
    case Algorithm::Agglomerative: return "agglomerative";
    case Algorithm::MeanShift: return "meanshift";
  }
  return "?";
}

std::vector<std::vector<std::uint32_t>> Clustering::members() const {
  std::vector<std::vector<std::uint32_t>> out(n_clusters);
  for (std::uint32_t r = 0; r < assignment.size(); ++r) out[assignment[r]].push_back(r);
  return out;
}

namespace {

constexpr std::size_t kD = kFeatureCount;

// Renumber labels so clusters appear in first-member row order; keeps
// partitions comparable across algorithms and runs.
void canonicalize(Clustering& cl, std::vector<std::uint32_t>& raw_labels) {
  std::vector<std::uint32_t> remap(raw_labels.size(), UINT32_MAX);
  std::uint32_t next = 0;
  cl.assignment.resize(raw_labels.size());
  for (std::size_t r = 0; r < raw_labels.size(); ++r) {
    std::uint32_t& m = remap[raw_labels[r]];
    if (m == UINT32_MAX) m = next++;
    cl.assignment[r] = m;
  }
  cl.n_clusters = next;
}

void require_rows(const FeatureMatrix& m, std::uint32_t k) {
  if (m.rows() == 0) throw ClusterError("clustering: empty matrix");
  if (k < 1 || k > m.rows())
    throw ClusterError("clustering: k = " + std::to_string(k) + " out of range 1.." +
                       std::to_string(m.rows()));
}

struct LloydResult {
  std::vector<std::uint32_t> labels;
  double inertia = 0.0;
};

LloydResult lloyd_run(const FeatureMatrix& m, const KMeansParams& p, std::uint64_t run_seed) {
  const std::size_t n = m.rows();
  const std::uint32_t k = p.k;
  Rng rng(run_seed);

  // k-means++ seeding.
  std::vector<double> centroids(k * kD);
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  {
    const std::size_t first = static_cast<std::size_t>(rng.below(n));
    std::copy_n(m.row(first), kD, centroids.begin());
    for (std::uint32_t c = 1; c < k; ++c) {
      parallel_for(n, p.threads, [&](std::size_t i) {
        d2[i] = std::min(d2[i], kern::l2sq(m.row(i), &centroids[(c - 1) * kD], kD));
      });
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) total += d2[i];
      std::size_t pick = 0;
      if (total > 0.0) {
        const double r = rng.unit() * total;
        double cum = 0.0;
        pick = n - 1;
        for (std::size_t i = 0; i < n; ++i) {
          cum += d2[i];
          if (cum > r) {
            pick = i;
            break;
          }
        }
      } else {
        pick = static_cast<std::size_t>(rng.below(n));  // all points coincide
      }
      std::copy_n(m.row(pick), kD, &centroids[c * kD]);
    }
  }

  std::vector<std::uint32_t> labels(n, 0);
  std::vector<double> best_d(n, 0.0);
  std::vector<std::uint64_t> counts(k, 0);

  // Nearest centroid per point, ties to the lowest centroid id.
  auto assign = [&](std::vector<std::uint32_t>& out, std::vector<std::uint8_t>& moved) {
    parallel_for(n, p.threads, [&](std::size_t i) {
      double best = kern::l2sq(m.row(i), &centroids[0], kD);
      std::uint32_t arg = 0;
      for (std::uint32_t c = 1; c < k; ++c) {
        const double d = kern::l2sq(m.row(i), &centroids[c * kD], kD);
        if (d < best) {
          best = d;
          arg = c;
        }
      }
      moved[i] = out[i] != arg;
      out[i] = arg;
      best_d[i] = best;
    });
  };
  auto recount = [&] {
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) ++counts[labels[i]];
  };

  double prev_inertia = std::numeric_limits<double>::infinity();
  double inertia = prev_inertia;
  std::vector<std::uint8_t> moved(n, 0);

  for (std::uint32_t iter = 0; iter < p.max_iter; ++iter) {
    assign(labels, moved);
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) changed |= moved[i] != 0;
    recount();

    // Reseed empty clusters at the point farthest from its own centroid.
    // Donors must come from clusters with >= 2 members, so each repair
    // fills one empty cluster for good and the loop terminates even when
    // every point is coincident.
    while (true) {
      std::uint32_t empty = k;
      for (std::uint32_t c = 0; c < k; ++c) {
        if (counts[c] == 0) {
          empty = c;
          break;
        }
      }
      if (empty == k) break;
      std::size_t far = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (counts[labels[i]] < 2) continue;
        if (far == n || best_d[i] > best_d[far]) far = i;
      }
      --counts[labels[far]];
      labels[far] = empty;
      ++counts[empty];
      std::copy_n(m.row(far), kD, &centroids[empty * kD]);
      best_d[far] = 0.0;
      changed = true;
    }

    // Centroids <- cluster means. Sequential accumulation in row order so
    // results are independent of the thread count.
    std::fill(centroids.begin(), centroids.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) kern::add(&centroids[labels[i] * kD], m.row(i), kD);
    for (std::uint32_t c = 0; c < k; ++c)
      for (std::size_t j = 0; j < kD; ++j) centroids[c * kD + j] /= static_cast<double>(counts[c]);

    inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      inertia += kern::l2sq(m.row(i), &centroids[labels[i] * kD], kD);
    if (inertia > prev_inertia * (1.0 + 1e-12))
      throw ClusterError("kmeans: inertia increased across a Lloyd iteration");

    // Unchanged assignments are already a fixed point of the recomputed
    // means. On a tol stop, take one extra assignment pass against the final
    // centroids so reassignment is a no-op there too; if that pass empties a
    // cluster, keep iterating instead.
    if (!changed) break;
    if (prev_inertia - inertia <= p.tol * prev_inertia) {
      std::vector<std::uint32_t> final_labels = labels;
      assign(final_labels, moved);
      std::vector<std::uint64_t> final_counts(k, 0);
      for (std::size_t i = 0; i < n; ++i) ++final_counts[final_labels[i]];
      if (std::find(final_counts.begin(), final_counts.end(), 0) == final_counts.end()) {
        labels = std::move(final_labels);
        inertia = 0.0;
        for (std::size_t i = 0; i < n; ++i) inertia += best_d[i];
        break;
      }
    }
    prev_inertia = inertia;
  }
  return {std::move(labels), inertia};
}

}  // namespace

Clustering kmeans(const FeatureMatrix& m, const KMeansParams& p) {
  require_rows(m, p.k);
  if (p.n_restarts < 1) throw ClusterError("kmeans: n_restarts must be >= 1");

  LloydResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (std::uint32_t r = 0; r < p.n_restarts; ++r) {
    LloydResult run = lloyd_run(m, p, mix_seed(p.seed, r));
    if (run.inertia < best.inertia) best = std::move(run);
  }

  Clustering cl;
  cl.ff_names = m.ff_names;
  cl.algorithm = Algorithm::KMeans;
  cl.seed = p.seed;
  cl.params_json = json{{"k", p.k},
                        {"max_iter", p.max_iter},
                        {"n_restarts", p.n_restarts},
                        {"tol", p.tol},
                        {"inertia", best.inertia}}
                       .dump();
  canonicalize(cl, best.labels);
  if (cl.n_clusters != p.k) throw ClusterError("kmeans: produced an empty cluster");
  return cl;
}

Clustering agglomerative(const FeatureMatrix& m, const AggloParams& p) {
  require_rows(m, p.k);
  const std::size_t n = m.rows();

  // Pairwise L1 distances, updated in place under complete linkage.
  std::vector<double> dist(n * n, 0.0);
  parallel_for(n, p.threads, [&](std::size_t i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = kern::l1(m.row(i), m.row(j), kD);
      dist[i * n + j] = d;
      dist[j * n + i] = d;
    }
  });

  struct Pair {
    double d;
    std::uint32_t i, j;  // i < j
    bool operator>(const Pair& o) const {
      if (d != o.d) return d > o.d;
      if (i != o.i) return i > o.i;
      return j > o.j;
    }
  };
  std::priority_queue<Pair, std::vector<Pair>, std::greater<Pair>> heap;
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = i + 1; j < n; ++j) heap.push({dist[i * n + j], i, j});

  std::vector<std::uint8_t> active(n, 1);
  std::vector<std::uint32_t> slot_of_row(n);
  for (std::uint32_t i = 0; i < n; ++i) slot_of_row[i] = i;
  std::size_t n_active = n;

  while (n_active > p.k) {
    // Lazy heap: stale entries are skipped by re-checking the live distance.
    Pair top = heap.top();
    heap.pop();
    if (!active[top.i] || !active[top.j] || dist[top.i * n + top.j] != top.d) continue;
    // Merge j into i (i < j): complete linkage keeps the max distance.
    active[top.j] = 0;
    for (std::uint32_t r = 0; r < n; ++r)
      if (slot_of_row[r] == top.j) slot_of_row[r] = top.i;
    for (std::uint32_t t = 0; t < n; ++t) {
      if (!active[t] || t == top.i) continue;
      const double d = std::max(dist[top.i * n + t], dist[top.j * n + t]);
      dist[top.i * n + t] = d;
      dist[t * n + top.i] = d;
      heap.push({d, std::min(top.i, t), std::max(top.i, t)});
    }
    --n_active;
  }

  Clustering cl;
  cl.ff_names = m.ff_names;
  cl.algorithm = Algorithm::Agglomerative;
  cl.params_json = json{{"k", p.k}, {"linkage", "complete"}, {"metric", "l1"}}.dump();
  canonicalize(cl, slot_of_row);
  return cl;
}

Clustering mean_shift(const FeatureMatrix& m, const MeanShiftParams& p,
                      std::vector<double>* centers_out) {
  if (m.rows() == 0) throw ClusterError("clustering: empty matrix");
  if (!(p.bandwidth > 0.0)) throw ClusterError("mean shift: bandwidth must be positive");
  const std::size_t n = m.rows();
  const double w2 = p.bandwidth * p.bandwidth;

  std::vector<double> centers(n * kD);
  for (std::size_t i = 0; i < n; ++i) std::copy_n(m.row(i), kD, &centers[i * kD]);
  std::vector<std::uint8_t> converged(n, 0);
  std::vector<std::uint64_t> window_count(n, 0);

  for (std::uint32_t iter = 0; iter < p.max_iter; ++iter) {
    bool all_done = true;
    parallel_for(n, p.threads, [&](std::size_t s) {
      if (converged[s]) return;
      double* center = &centers[s * kD];
      double mean[kD] = {0.0};
      std::uint64_t count = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (kern::l2sq(m.row(i), center, kD) <= w2) {
          kern::add(mean, m.row(i), kD);
          ++count;
        }
      }
      window_count[s] = count;
      if (count == 0) {  // stranded window; stay put
        converged[s] = 1;
        return;
      }
      for (std::size_t j = 0; j < kD; ++j) mean[j] /= static_cast<double>(count);
      const double shift2 = kern::l2sq(mean, center, kD);
      std::copy_n(mean, kD, center);
      if (shift2 <= p.shift_tol * p.shift_tol) converged[s] = 1;
    });
    for (std::size_t s = 0; s < n; ++s) all_done &= converged[s] != 0;
    if (all_done) break;
  }

  // Window strengths at the final center positions.
  parallel_for(n, p.threads, [&](std::size_t s) {
    std::uint64_t count = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (kern::l2sq(m.row(i), &centers[s * kD], kD) <= w2) ++count;
    window_count[s] = count;
  });

  // Merge converged centers closer than w, strongest window first.
  std::vector<std::uint32_t> order(n);
  for (std::uint32_t s = 0; s < n; ++s) order[s] = s;
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (window_count[a] != window_count[b]) return window_count[a] > window_count[b];
    return a < b;
  });
  std::vector<std::uint32_t> survivors;
  std::vector<std::uint8_t> absorbed(n, 0);
  for (std::uint32_t s : order) {
    if (absorbed[s]) continue;
    survivors.push_back(s);
    for (std::uint32_t t : order) {
      if (absorbed[t] || t == s) continue;
      if (kern::l2sq(&centers[s * kD], &centers[t * kD], kD) < w2) absorbed[t] = 1;
    }
  }

  // Nearest surviving center wins; ties to the earlier (stronger) survivor.
  std::vector<std::uint32_t> labels(n, 0);
  parallel_for(n, p.threads, [&](std::size_t i) {
    double best = std::numeric_limits<double>::infinity();
    std::uint32_t arg = 0;
    for (std::uint32_t s = 0; s < survivors.size(); ++s) {
      const double d = kern::l2sq(m.row(i), &centers[survivors[s] * kD], kD);
      if (d < best) {
        best = d;
        arg = s;
      }
    }
    labels[i] = arg;
  });

  Clustering cl;
  cl.ff_names = m.ff_names;
  cl.algorithm = Algorithm::MeanShift;
  cl.params_json = json{{"bandwidth", p.bandwidth},
                        {"max_iter", p.max_iter},
                        {"shift_tol", p.shift_tol}}
                       .dump();
  canonicalize(cl, labels);
  if (centers_out) {
    centers_out->assign(cl.n_clusters * kD, 0.0);
    std::vector<std::uint8_t> seen(cl.n_clusters, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint32_t c = cl.assignment[i];
      if (!seen[c]) {
        seen[c] = 1;
        std::copy_n(&centers[survivors[labels[i]] * kD], kD, &(*centers_out)[c * kD]);
      }
    }
  }
  return cl;
}

BandwidthPick pick_bandwidth(const FeatureMatrix& m, std::uint32_t target_nc, double w_lo,
                             double w_hi, const MeanShiftParams& base) {
  if (target_nc < 1 || target_nc > m.rows())
    throw ClusterError("pick_bandwidth: target out of range");
  if (!(0.0 < w_lo && w_lo < w_hi)) throw ClusterError("pick_bandwidth: bad bracket");

  MeanShiftParams p = base;
  BandwidthPick best;
  double lo = w_lo, hi = w_hi;
  for (int iter = 0; iter < 32; ++iter) {
    const double w = 0.5 * (lo + hi);
    p.bandwidth = w;
    const std::uint32_t nc = mean_shift(m, p).n_clusters;
    const auto gap = [&](std::uint32_t c) {
      return c > target_nc ? c - target_nc : target_nc - c;
    };
    if (best.bandwidth == 0.0 || gap(nc) < gap(best.n_clusters) ||
        (gap(nc) == gap(best.n_clusters) && w > best.bandwidth)) {
      best.bandwidth = w;
      best.n_clusters = nc;
    }
    if (nc == target_nc) {
      best.on_target = true;
      return best;
    }
    // N_c is non-increasing in w in practice.
    if (nc > target_nc) {
      lo = w;
    } else {
      hi = w;
    }
  }
  best.on_target = false;
  return best;
}

std::uint32_t target_count(std::size_t n_ff, double fraction) {
  if (n_ff < 1) throw ClusterError("target_count: need at least one FF");
  const long long c = std::llround(static_cast<double>(n_ff) * fraction);
  return static_cast<std::uint32_t>(std::max(1LL, c));
}

TargetCounts target_counts(std::size_t n_ff) {
  return {target_count(n_ff, 0.05), target_count(n_ff, 0.10), target_count(n_ff, 0.20)};
}

std::string clusters_csv(const Clustering& cl) {
  std::string out = "ff_name,cluster_id\n";
  for (std::size_t r = 0; r < cl.ff_names.size(); ++r)
    out += cl.ff_names[r] + "," + std::to_string(cl.assignment[r]) + "\n";
  return out;
}

Clustering parse_clusters_csv(const std::string& text) {
  const auto lines = split_lines(text);
  if (lines.empty() || lines[0] != "ff_name,cluster_id")
    throw ClusterError("clusters csv: bad header");
  Clustering cl;
  std::uint32_t max_id = 0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cols = split_csv(lines[i]);
    if (cols.size() != 2) throw ClusterError("clusters csv: bad row '" + lines[i] + "'");
    cl.ff_names.push_back(cols[0]);
    const long long id = parse_int(cols[1]);
    if (id < 0) throw ClusterError("clusters csv: negative cluster id");
    cl.assignment.push_back(static_cast<std::uint32_t>(id));
    max_id = std::max(max_id, cl.assignment.back());
  }
  if (cl.assignment.empty()) throw ClusterError("clusters csv: no rows");
  cl.n_clusters = max_id + 1;
  std::vector<std::uint64_t> counts(cl.n_clusters, 0);
  for (std::uint32_t a : cl.assignment) ++counts[a];
  for (std::uint32_t c = 0; c < cl.n_clusters; ++c)
    if (counts[c] == 0)
      throw ClusterError("clusters csv: cluster ids are not dense (id " + std::to_string(c) +
                         " is empty)");
  return cl;
}

std::string clustering_sidecar_json(const Clustering& cl) {
  json doc;
  doc["algorithm"] = std::string(algorithm_name(cl.algorithm));
  doc["params"] = json::parse(cl.params_json.empty() ? "{}" : cl.params_json);
  doc["seed"] = cl.seed;
  doc["n_clusters"] = cl.n_clusters;
  return doc.dump(2) + "\n";
}

}  // namespace ffc
