#include "ffc/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "ffc/io.hpp"
#include "ffc/kernels.hpp"
#include "ffc/rng.hpp"
#include "json.hpp"

namespace ffc {

using nlohmann::json;

double RateTable::total() const {
  double t = 0.0;
  for (double r : rates) t += r;
  return t;
}

double RateTable::rate_of(const std::string& ff) const {
  const auto it = std::lower_bound(ff_names.begin(), ff_names.end(), ff);
  if (it == ff_names.end() || *it != ff) throw EvalError("no rate for flip-flop '" + ff + "'");
  return rates[static_cast<std::size_t>(it - ff_names.begin())];
}

RateTable rates_from_campaign(const std::vector<TargetResult>& per_ff) {
  std::map<std::string, double> sorted;
  for (const auto& t : per_ff) {
    if (!sorted.emplace(t.target, t.rate).second)
      throw EvalError("duplicate campaign target '" + t.target + "'");
  }
  RateTable rt;
  for (const auto& [name, rate] : sorted) {
    rt.ff_names.push_back(name);
    rt.rates.push_back(rate);
  }
  return rt;
}

std::vector<double> cluster_rates(const Clustering& cl, const RateTable& per_ff) {
  std::vector<double> sums(cl.n_clusters, 0.0);
  std::vector<std::uint64_t> sizes(cl.n_clusters, 0);
  for (std::size_t r = 0; r < cl.ff_names.size(); ++r) {
    sums[cl.assignment[r]] += per_ff.rate_of(cl.ff_names[r]);
    ++sizes[cl.assignment[r]];
  }
  std::vector<double> rates(cl.n_clusters);
  for (std::uint32_t c = 0; c < cl.n_clusters; ++c)
    rates[c] = sums[c] / static_cast<double>(sizes[c]);
  return rates;
}

MitigationCurve mitigation_curve(const std::vector<std::string>& order, const RateTable& rates,
                                 std::string strategy) {
  const std::size_t n = rates.ff_names.size();
  {
    std::vector<std::string> check = order;
    std::sort(check.begin(), check.end());
    if (check != rates.ff_names)
      throw EvalError("mitigation order is not a permutation of the rated FFs");
  }

  MitigationCurve curve;
  curve.strategy = std::move(strategy);
  curve.fractions.resize(n + 1);
  curve.residuals.resize(n + 1);
  for (std::size_t m = 0; m <= n; ++m)
    curve.fractions[m] = static_cast<double>(m) / static_cast<double>(n);

  const double total = rates.total();
  if (total == 0.0) {
    curve.all_zero = true;
    std::fill(curve.residuals.begin(), curve.residuals.end(), 0.0);
    return curve;
  }
  // Suffix sums keep the endpoints exact: residual_0 = 1, residual_n = 0.
  double suffix = 0.0;
  curve.residuals[n] = 0.0;
  for (std::size_t m = n; m-- > 0;) {
    suffix += rates.rate_of(order[m]);
    curve.residuals[m] = suffix / total;
  }
  curve.residuals[0] = 1.0;
  return curve;
}

std::vector<std::string> ideal_order(const RateTable& rates) {
  std::vector<std::size_t> idx(rates.ff_names.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (rates.rates[a] != rates.rates[b]) return rates.rates[a] > rates.rates[b];
    return rates.ff_names[a] < rates.ff_names[b];
  });
  std::vector<std::string> order;
  order.reserve(idx.size());
  for (std::size_t i : idx) order.push_back(rates.ff_names[i]);
  return order;
}

std::vector<std::string> clustered_order(const Clustering& cl, const RateTable& rates) {
  const auto crates = cluster_rates(cl, rates);
  std::vector<std::uint32_t> cidx(cl.n_clusters);
  for (std::uint32_t c = 0; c < cl.n_clusters; ++c) cidx[c] = c;
  std::sort(cidx.begin(), cidx.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (crates[a] != crates[b]) return crates[a] > crates[b];
    return a < b;
  });
  const auto members = cl.members();
  std::vector<std::string> order;
  order.reserve(cl.ff_names.size());
  for (std::uint32_t c : cidx)
    for (std::uint32_t r : members[c]) order.push_back(cl.ff_names[r]);  // row order = name order
  return order;
}

MitigationCurve random_baseline(const RateTable& rates, std::uint32_t n_runs,
                                std::uint64_t seed) {
  if (n_runs < 1) throw EvalError("random baseline: n_runs must be >= 1");
  const std::size_t n = rates.ff_names.size();
  std::vector<double> acc(n + 1, 0.0);
  bool all_zero = false;
  for (std::uint32_t run = 0; run < n_runs; ++run) {
    std::vector<std::string> order = rates.ff_names;
    Rng rng(mix_seed(seed, run));
    rng.shuffle(order);
    const MitigationCurve c = mitigation_curve(order, rates, "random");
    all_zero = c.all_zero;
    for (std::size_t m = 0; m <= n; ++m) acc[m] += c.residuals[m];
  }
  MitigationCurve curve;
  curve.strategy = "random";
  curve.all_zero = all_zero;
  curve.fractions.resize(n + 1);
  curve.residuals.resize(n + 1);
  for (std::size_t m = 0; m <= n; ++m) {
    curve.fractions[m] = static_cast<double>(m) / static_cast<double>(n);
    curve.residuals[m] = acc[m] / static_cast<double>(n_runs);
  }
  return curve;
}

VarMetrics quality_metrics(const Clustering& cl, const RateTable& rates) {
  const auto members = cl.members();
  VarMetrics out;
  for (const auto& rows : members) {
    double mean = 0.0;
    double lo = 0.0, hi = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const double r = rates.rate_of(cl.ff_names[rows[i]]);
      mean += r;
      lo = i == 0 ? r : std::min(lo, r);
      hi = i == 0 ? r : std::max(hi, r);
    }
    mean /= static_cast<double>(rows.size());
    double var = 0.0;
    for (std::uint32_t r : rows) {
      const double d = rates.rate_of(cl.ff_names[r]) - mean;
      var += d * d;
    }
    var /= static_cast<double>(rows.size());  // population variance
    out.mean_var += var;
    out.weighted_var += static_cast<double>(rows.size()) * var;
    out.max_diff = std::max(out.max_diff, hi - lo);
  }
  out.mean_var /= static_cast<double>(cl.n_clusters);
  out.weighted_var /= static_cast<double>(cl.n_clusters);
  return out;
}

double davies_bouldin(const FeatureMatrix& m, const Clustering& cl) {
  if (cl.n_clusters < 2) throw EvalError("davies-bouldin: needs at least 2 clusters");
  if (cl.ff_names != m.ff_names)
    throw EvalError("davies-bouldin: clustering and matrix rows disagree");
  const std::uint32_t nc = cl.n_clusters;
  const auto members = cl.members();

  std::vector<double> centroids(nc * kFeatureCount, 0.0);
  for (std::uint32_t c = 0; c < nc; ++c) {
    for (std::uint32_t r : members[c]) kern::add(&centroids[c * kFeatureCount], m.row(r), kFeatureCount);
    for (std::size_t j = 0; j < kFeatureCount; ++j)
      centroids[c * kFeatureCount + j] /= static_cast<double>(members[c].size());
  }

  // S_c: mean member distance to the centroid (0 for singletons).
  std::vector<double> scatter(nc, 0.0);
  for (std::uint32_t c = 0; c < nc; ++c) {
    double s = 0.0;
    for (std::uint32_t r : members[c])
      s += std::sqrt(kern::l2sq(m.row(r), &centroids[c * kFeatureCount], kFeatureCount));
    scatter[c] = s / static_cast<double>(members[c].size());
  }

  double db = 0.0;
  for (std::uint32_t i = 0; i < nc; ++i) {
    double worst = 0.0;
    for (std::uint32_t j = 0; j < nc; ++j) {
      if (j == i) continue;
      const double sep = std::sqrt(
          kern::l2sq(&centroids[i * kFeatureCount], &centroids[j * kFeatureCount], kFeatureCount));
      if (sep == 0.0)
        throw EvalError("davies-bouldin: clusters " + std::to_string(i) + " and " +
                        std::to_string(j) + " have identical centroids");
      worst = std::max(worst, (scatter[i] + scatter[j]) / sep);
    }
    db += worst;
  }
  return db / static_cast<double>(nc);
}

QualityReport quality_report(const FeatureMatrix& m, const Clustering& cl,
                             const RateTable& rates) {
  QualityReport q;
  q.n_clusters = cl.n_clusters;
  const double n_ff = static_cast<double>(cl.ff_names.size());
  q.mean_size = n_ff / static_cast<double>(cl.n_clusters);
  const auto members = cl.members();
  double var = 0.0;
  for (const auto& rows : members) {
    const double d = static_cast<double>(rows.size()) - q.mean_size;
    var += d * d;
  }
  q.std_size = std::sqrt(var / static_cast<double>(cl.n_clusters));
  q.var = quality_metrics(cl, rates);
  if (cl.n_clusters >= 2) {
    q.db = davies_bouldin(m, cl);
    q.has_db = true;
  }
  return q;
}

namespace {

// Piecewise-linear interpolation of residual(fraction).
double interp(const MitigationCurve& c, double x) {
  const auto& xs = c.fractions;
  const auto& ys = c.residuals;
  if (x <= xs.front()) return ys.front();
  if (x >= xs.back()) return ys.back();
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  const std::size_t hi = static_cast<std::size_t>(it - xs.begin());
  const std::size_t lo = hi - 1;
  const double t = (x - xs[lo]) / (xs[hi] - xs[lo]);
  return ys[lo] + t * (ys[hi] - ys[lo]);
}

void check_curve(const MitigationCurve& c) {
  if (c.fractions.size() < 2 || c.fractions.size() != c.residuals.size())
    throw EvalError("curve '" + c.strategy + "' is malformed");
  for (std::size_t i = 1; i < c.fractions.size(); ++i)
    if (c.fractions[i] <= c.fractions[i - 1])
      throw EvalError("curve '" + c.strategy + "' fractions must increase");
}

}  // namespace

double curve_gap(const MitigationCurve& a, const MitigationCurve& b) {
  check_curve(a);
  check_curve(b);
  std::vector<double> grid = a.fractions;
  grid.insert(grid.end(), b.fractions.begin(), b.fractions.end());
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  double area = 0.0;
  double prev_x = grid.front();
  double prev_d = interp(a, prev_x) - interp(b, prev_x);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double x = grid[i];
    const double d = interp(a, x) - interp(b, x);
    area += 0.5 * (prev_d + d) * (x - prev_x);
    prev_x = x;
    prev_d = d;
  }
  return area;
}

std::string curves_csv(const std::vector<MitigationCurve>& curves) {
  std::string out = "strategy,fraction,residual\n";
  for (const auto& c : curves)
    for (std::size_t i = 0; i < c.fractions.size(); ++i)
      out += c.strategy + "," + fmt_g9(c.fractions[i]) + "," + fmt_g9(c.residuals[i]) + "\n";
  return out;
}

std::vector<MitigationCurve> parse_curves_csv(const std::string& text) {
  const auto lines = split_lines(text);
  if (lines.empty() || lines[0] != "strategy,fraction,residual")
    throw EvalError("curves csv: bad header");
  std::vector<MitigationCurve> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cols = split_csv(lines[i]);
    if (cols.size() != 3) throw EvalError("curves csv: bad row '" + lines[i] + "'");
    if (out.empty() || out.back().strategy != cols[0]) {
      out.emplace_back();
      out.back().strategy = cols[0];
    }
    out.back().fractions.push_back(parse_double(cols[1]));
    out.back().residuals.push_back(parse_double(cols[2]));
  }
  return out;
}

std::string quality_json(const QualityReport& q) {
  json doc;
  doc["n_clusters"] = q.n_clusters;
  doc["mean_size"] = q.mean_size;
  doc["std_size"] = q.std_size;
  doc["mean_var"] = q.var.mean_var;
  doc["weighted_var"] = q.var.weighted_var;
  doc["max_diff"] = q.var.max_diff;
  doc["davies_bouldin"] = q.has_db ? json(q.db) : json(nullptr);
  return doc.dump(2) + "\n";
}

}  // namespace ffc
