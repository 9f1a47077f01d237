// ffclust: group flip-flops by expected soft-error criticality and check the
// grouping with seeded SEU injection campaigns.
//
// Pipeline: bench-gen -> extract -> cluster -> inject -> evaluate -> report.
// Every stage is a pure function of its input files plus flags; all
// randomness derives from --seed, so reruns are byte-identical.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>

#include "CLI11.hpp"
#include "ffc/circuit.hpp"
#include "ffc/cluster.hpp"
#include "ffc/evaluate.hpp"
#include "ffc/faultsim.hpp"
#include "ffc/features.hpp"
#include "ffc/io.hpp"
#include "ffc/rng.hpp"
#include "ffc/synthbench.hpp"
#include "ffc/trace.hpp"
#include "json.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

// Per-stage child seeds, all derived from the one --seed.
enum StageTag : std::uint64_t {
  kTagStimulus = 1,
  kTagCluster = 2,
  kTagInject = 3,
  kTagEvaluate = 4,
};

using nlohmann::json;

struct Global {
  std::uint64_t seed = 1;
  int threads = 1;
  std::string out_dir = ".";

  std::string path(const std::string& name) const { return out_dir + "/" + name; }
};

void write_run_json(const Global& g, const std::string& stage, json params) {
  json doc;
  doc["tool"] = "ffclust";
  doc["version"] = kVersion;
  doc["command"] = stage;
  doc["seed"] = g.seed;
  doc["params"] = std::move(params);
  std::filesystem::create_directories(g.out_dir);
  ffc::spit(g.path(stage + ".run.json"), doc.dump(2) + "\n");
}

ffc::Clustering load_clusters(const std::string& path) {
  return ffc::parse_clusters_csv(ffc::slurp(path));
}

// ---- extract ---------------------------------------------------------

struct ExtractOpts {
  std::string netlist;
  std::string activity = "simulate";  // "simulate" | "vcd"
  std::string workload;
  std::string vcd;
  std::string name_map;
  std::uint64_t vcd_period = 0;  // 0 = take the $timescale magnitude
  std::uint64_t window_start = 0, window_end = 0;
  std::string emit_vcd;
};

int cmd_extract(const Global& g, const ExtractOpts& o) {
  const ffc::CircuitGraph circuit = ffc::load_netlist_file(o.netlist);
  const ffc::FFDependencyGraph dep = ffc::derive_ff_graph(circuit);

  std::vector<ffc::SignalTimeline> timelines;
  if (o.activity == "simulate") {
    if (o.workload.empty()) throw ffc::IoError("extract: --activity simulate needs --workload");
    const ffc::Workload w = ffc::load_workload_file(o.workload);
    ffc::Simulator sim(circuit, w);
    timelines = sim.golden().timelines(circuit);
    if (!o.emit_vcd.empty()) ffc::spit(o.emit_vcd, ffc::write_vcd(circuit, timelines));
  } else if (o.activity == "vcd") {
    if (o.vcd.empty()) throw ffc::IoError("extract: --activity vcd needs --vcd");
    std::map<std::string, std::string> map;
    if (o.name_map.empty()) {
      map = ffc::vcd_name_map(circuit);
    } else {
      const json doc = json::parse(ffc::slurp(o.name_map));
      for (auto it = doc.begin(); it != doc.end(); ++it)
        map[it.key()] = it.value().get<std::string>();
    }
    ffc::VcdResult vr = ffc::parse_vcd(ffc::slurp(o.vcd), map, o.vcd_period);
    for (const auto& warning : vr.warnings) std::cerr << "warning: " << warning << "\n";
    timelines = std::move(vr.timelines);
  } else {
    throw ffc::IoError("extract: --activity must be 'simulate' or 'vcd'");
  }

  std::vector<ffc::ActivityStats> activity;
  activity.reserve(timelines.size());
  for (const auto& tl : timelines) {
    activity.push_back(o.window_end > 0
                           ? ffc::compute_activity_window(tl, o.window_start, o.window_end)
                           : ffc::compute_activity(tl));
  }

  const ffc::FeatureMatrix raw = ffc::assemble(circuit, dep, activity);
  const ffc::FeatureMatrix std_m = ffc::standardize(raw);
  std::filesystem::create_directories(g.out_dir);
  ffc::spit(g.path("features.raw.csv"), ffc::features_csv(raw));
  ffc::spit(g.path("features.std.csv"), ffc::features_csv(std_m));

  json params{{"netlist", o.netlist},
              {"activity", o.activity},
              {"ff_count", circuit.ff_count()},
              {"col_mean", std_m.col_mean},
              {"col_std", std_m.col_std}};
  if (o.activity == "vcd") {
    params["vcd"] = o.vcd;
    params["vcd_period"] = o.vcd_period;
  } else {
    params["workload"] = o.workload;
  }
  if (o.window_end > 0) params["window"] = {o.window_start, o.window_end};
  write_run_json(g, "extract", params);
  return 0;
}

// ---- cluster ---------------------------------------------------------

struct ClusterOpts {
  std::string features;
  std::string algo = "kmeans";  // kmeans | agglo | meanshift
  std::uint32_t k = 0;
  double target_frac = 0.0;
  double bandwidth = 0.0;
  double w_lo = 0.05, w_hi = 64.0;
  std::uint32_t max_iter = 300;
  std::uint32_t restarts = 10;
  double tol = 1e-6;
};

int cmd_cluster(const Global& g, const ClusterOpts& o) {
  const ffc::FeatureMatrix m = ffc::parse_features_csv(ffc::slurp(o.features));
  const std::uint64_t stage_seed = ffc::mix_seed(g.seed, kTagCluster);

  std::uint32_t k = o.k;
  if (o.target_frac > 0.0) k = ffc::target_count(m.rows(), o.target_frac);

  ffc::Clustering cl;
  json extra;
  if (o.algo == "kmeans") {
    if (k == 0) throw ffc::ClusterError("cluster: kmeans needs --k or --target-frac");
    ffc::KMeansParams p;
    p.k = k;
    p.seed = stage_seed;
    p.max_iter = o.max_iter;
    p.n_restarts = o.restarts;
    p.tol = o.tol;
    p.threads = g.threads;
    cl = ffc::kmeans(m, p);
  } else if (o.algo == "agglo") {
    if (k == 0) throw ffc::ClusterError("cluster: agglo needs --k or --target-frac");
    cl = ffc::agglomerative(m, {k, g.threads});
  } else if (o.algo == "meanshift") {
    ffc::MeanShiftParams p;
    p.max_iter = o.max_iter;
    p.threads = g.threads;
    if (o.bandwidth > 0.0) {
      p.bandwidth = o.bandwidth;
      cl = ffc::mean_shift(m, p);
    } else if (k > 0) {
      const ffc::BandwidthPick pick = ffc::pick_bandwidth(m, k, o.w_lo, o.w_hi, p);
      if (!pick.on_target)
        std::cerr << "warning: bandwidth search stopped at N_c = " << pick.n_clusters
                  << " (target " << k << ")\n";
      p.bandwidth = pick.bandwidth;
      cl = ffc::mean_shift(m, p);
      extra["picked_bandwidth"] = pick.bandwidth;
      extra["bandwidth_on_target"] = pick.on_target;
    } else {
      throw ffc::ClusterError("cluster: meanshift needs --bandwidth or --target-frac/--k");
    }
  } else {
    throw ffc::ClusterError("cluster: unknown algorithm '" + o.algo + "'");
  }

  std::filesystem::create_directories(g.out_dir);
  ffc::spit(g.path("clusters.csv"), ffc::clusters_csv(cl));
  ffc::spit(g.path("clusters.json"), ffc::clustering_sidecar_json(cl));

  json params{{"features", o.features},
              {"algo", o.algo},
              {"n_clusters", cl.n_clusters},
              {"stage_seed", stage_seed}};
  if (k > 0) params["k"] = k;
  if (o.target_frac > 0.0) params["target_frac"] = o.target_frac;
  if (!extra.is_null()) params["meanshift"] = extra;
  write_run_json(g, "cluster", params);
  return 0;
}

// ---- inject ----------------------------------------------------------

struct InjectOpts {
  std::string netlist;
  std::string workload;
  std::string granularity = "ff";  // ff | cluster
  std::string clusters;
  std::uint64_t n_per_target = 200;
};

int cmd_inject(const Global& g, const InjectOpts& o) {
  const ffc::CircuitGraph circuit = ffc::load_netlist_file(o.netlist);
  const ffc::Workload w = ffc::load_workload_file(o.workload);
  const ffc::Simulator sim(circuit, w);
  const std::uint64_t stage_seed = ffc::mix_seed(g.seed, kTagInject);

  std::vector<ffc::TargetSpec> targets;
  ffc::Granularity gran;
  if (o.granularity == "ff") {
    gran = ffc::Granularity::PerFF;
    std::map<std::string, ffc::NodeId> by_name;
    for (ffc::NodeId id : circuit.ffs) by_name[circuit.nodes[id].name] = id;
    for (const auto& [name, id] : by_name) targets.push_back({name, {id}});
  } else if (o.granularity == "cluster") {
    gran = ffc::Granularity::PerCluster;
    if (o.clusters.empty()) throw ffc::SimError("inject: --granularity cluster needs --clusters");
    const ffc::Clustering cl = load_clusters(o.clusters);
    targets.resize(cl.n_clusters);
    for (std::uint32_t c = 0; c < cl.n_clusters; ++c) targets[c].name = std::to_string(c);
    for (std::size_t r = 0; r < cl.ff_names.size(); ++r)
      targets[cl.assignment[r]].ffs.push_back(circuit.id_of(cl.ff_names[r]));
  } else {
    throw ffc::SimError("inject: --granularity must be 'ff' or 'cluster'");
  }

  const ffc::CampaignResult result =
      sim.run_campaign(gran, targets, o.n_per_target, stage_seed, g.threads);

  std::filesystem::create_directories(g.out_dir);
  ffc::spit(g.path("campaign.csv"), ffc::campaign_csv(result));

  write_run_json(g, "inject",
                 json{{"netlist", o.netlist},
                      {"workload", o.workload},
                      {"granularity", o.granularity},
                      {"n_per_target", o.n_per_target},
                      {"targets", targets.size()},
                      {"total_injections", result.total_injections()},
                      {"stage_seed", stage_seed}});
  return 0;
}

// ---- evaluate --------------------------------------------------------

struct EvaluateOpts {
  std::string campaign;  // per-FF campaign.csv
  std::string clusters;
  std::string features;
  std::uint32_t n_random = 100;
};

int cmd_evaluate(const Global& g, const EvaluateOpts& o) {
  const ffc::RateTable rates =
      ffc::rates_from_campaign(ffc::parse_campaign_csv(ffc::slurp(o.campaign)));
  const ffc::Clustering cl = load_clusters(o.clusters);
  const ffc::FeatureMatrix m = ffc::parse_features_csv(ffc::slurp(o.features));
  const std::uint64_t stage_seed = ffc::mix_seed(g.seed, kTagEvaluate);

  // The csv has no algorithm column; take it from the sidecar when present.
  std::string label = "clustered";
  if (const auto pos = o.clusters.rfind(".csv"); pos != std::string::npos) {
    const std::string meta = o.clusters.substr(0, pos) + ".json";
    std::error_code ec;
    if (std::filesystem::exists(meta, ec)) {
      const json side = json::parse(ffc::slurp(meta));
      if (side.contains("algorithm"))
        label += ":" + side.at("algorithm").get<std::string>();
    }
  }
  label += ":" + std::to_string(cl.n_clusters);

  const auto ideal = ffc::mitigation_curve(ffc::ideal_order(rates), rates, "ideal");
  const auto clustered =
      ffc::mitigation_curve(ffc::clustered_order(cl, rates), rates, label);
  const auto random = ffc::random_baseline(rates, o.n_random, stage_seed);
  if (ideal.all_zero) std::cerr << "warning: all per-FF rates are zero; curves are flat\n";

  const ffc::QualityReport q = ffc::quality_report(m, cl, rates);

  std::filesystem::create_directories(g.out_dir);
  ffc::spit(g.path("curve.csv"), ffc::curves_csv({clustered, ideal, random}));
  ffc::spit(g.path("quality.json"), ffc::quality_json(q));

  write_run_json(g, "evaluate",
                 json{{"campaign", o.campaign},
                      {"clusters", o.clusters},
                      {"features", o.features},
                      {"n_random", o.n_random},
                      {"stage_seed", stage_seed},
                      {"gap_clustered_ideal", ffc::curve_gap(clustered, ideal)},
                      {"gap_clustered_random", ffc::curve_gap(clustered, random)}});
  return 0;
}

// ---- bench-gen -------------------------------------------------------

struct BenchOpts {
  std::uint32_t blocks = 8;
  std::vector<std::string> kinds;
  std::uint32_t min_ff = 4;
  std::uint32_t max_ff = 24;
  double bus_frac = 0.5;
  std::uint64_t horizon = 1024;
};

int cmd_bench_gen(const Global& g, const BenchOpts& o) {
  ffc::BenchSpec spec;
  spec.seed = g.seed;
  spec.n_blocks = o.blocks;
  spec.block_ff_min = o.min_ff;
  spec.block_ff_max = o.max_ff;
  spec.bus_fraction = o.bus_frac;
  spec.horizon = o.horizon;
  for (const auto& name : o.kinds) {
    bool known = false;
    for (ffc::BlockKind k :
         {ffc::BlockKind::ShiftChain, ffc::BlockKind::Counter, ffc::BlockKind::Ring,
          ffc::BlockKind::CrcLike, ffc::BlockKind::FifoLike, ffc::BlockKind::DeadLogic}) {
      if (name == ffc::block_kind_name(k)) {
        spec.kinds.push_back(k);
        known = true;
      }
    }
    if (!known) throw ffc::BenchError("bench-gen: unknown block kind '" + name + "'");
  }

  const ffc::BenchOutput bench = ffc::generate(spec);
  std::filesystem::create_directories(g.out_dir);
  ffc::spit(g.path("netlist.json"), ffc::serialize_netlist(bench.circuit));
  ffc::spit(g.path("workload.json"), ffc::serialize_workload(bench.workload));
  ffc::spit(g.path("blocks.csv"), ffc::blocks_csv(bench.blocks));

  write_run_json(g, "bench-gen",
                 json{{"blocks", o.blocks},
                      {"ff_count", bench.circuit.ff_count()},
                      {"horizon", o.horizon},
                      {"bus_frac", o.bus_frac}});
  return 0;
}

// ---- report ----------------------------------------------------------

struct ReportOpts {
  std::string campaign;
  std::string clusters;
  std::string curves;
  std::string quality;
};

int cmd_report(const Global& g, const ReportOpts& o) {
  std::string out;
  auto line = [&](const std::string& s) { out += s + "\n"; };
  line("ffclust report");
  line("==============");

  std::size_t n_ff = 0, n_clusters = 0;
  if (!o.clusters.empty()) {
    const ffc::Clustering cl = load_clusters(o.clusters);
    n_ff = cl.ff_names.size();
    n_clusters = cl.n_clusters;
    line("");
    line("clustering: " + std::to_string(n_clusters) + " clusters over " +
         std::to_string(n_ff) + " flip-flops");
  }
  if (!o.campaign.empty()) {
    const auto targets = ffc::parse_campaign_csv(ffc::slurp(o.campaign));
    std::uint64_t inj = 0, fail = 0;
    for (const auto& t : targets) {
      inj += t.injections;
      fail += t.failures;
    }
    const double rate = 100.0 * static_cast<double>(fail) / static_cast<double>(inj);
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "campaign: %zu targets, %llu injections, %llu functional failures (%.2f %%)",
                  targets.size(), static_cast<unsigned long long>(inj),
                  static_cast<unsigned long long>(fail), rate);
    line("");
    line(buf);
    if (n_ff > 0 && n_clusters > 0 && targets.size() == n_clusters) {
      char fbuf[128];
      std::snprintf(fbuf, sizeof(fbuf),
                    "effort: %zu per-cluster targets instead of %zu per-FF targets (%.1fx fewer "
                    "injections)",
                    n_clusters, n_ff,
                    static_cast<double>(n_ff) / static_cast<double>(n_clusters));
      line(fbuf);
    }
  }
  if (!o.curves.empty()) {
    const auto curves = ffc::parse_curves_csv(ffc::slurp(o.curves));
    const ffc::MitigationCurve* ideal = nullptr;
    const ffc::MitigationCurve* random = nullptr;
    for (const auto& c : curves) {
      if (c.strategy == "ideal") ideal = &c;
      if (c.strategy == "random") random = &c;
    }
    line("");
    line("mitigation curves (area gap, lower beats the baseline):");
    for (const auto& c : curves) {
      if (!ideal || &c == ideal) continue;
      char buf[80];
      std::snprintf(buf, sizeof(buf), "  %-28s vs ideal %+0.4f", c.strategy.c_str(),
                    ffc::curve_gap(c, *ideal));
      std::string row = buf;
      if (random && &c != random) {
        std::snprintf(buf, sizeof(buf), " | vs random %+0.4f", ffc::curve_gap(c, *random));
        row += buf;
      }
      line(row);
    }
  }
  if (!o.quality.empty()) {
    line("");
    line("cluster quality:");
    const json q = json::parse(ffc::slurp(o.quality));
    for (auto it = q.begin(); it != q.end(); ++it)
      line("  " + it.key() + " = " + it.value().dump());
  }
  line("");

  std::filesystem::create_directories(g.out_dir);
  ffc::spit(g.path("report.txt"), out);
  std::cout << out;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"flip-flop criticality clustering and SEU fault-injection toolkit"};
  app.require_subcommand(1);

  Global g;
  app.add_option("--seed", g.seed, "master seed; stages derive child seeds from it");
  app.add_option("--threads", g.threads, "worker threads (output is independent of this)");
  app.add_option("--out-dir", g.out_dir, "directory for stage outputs");

  ExtractOpts ex;
  CLI::App* extract = app.add_subcommand("extract", "compute the per-FF feature matrix");
  extract->add_option("--netlist", ex.netlist, "netlist JSON")->required();
  extract->add_option("--activity", ex.activity, "activity source: simulate|vcd");
  extract->add_option("--workload", ex.workload, "workload JSON (simulate mode)");
  extract->add_option("--vcd", ex.vcd, "VCD file (vcd mode)");
  extract->add_option("--name-map", ex.name_map, "JSON map vcd_path -> ff_name");
  extract->add_option("--vcd-period", ex.vcd_period, "cycle period override in VCD time units");
  extract->add_option("--window-start", ex.window_start, "activity window start cycle");
  extract->add_option("--window-end", ex.window_end, "activity window end cycle (0 = horizon)");
  extract->add_option("--emit-vcd", ex.emit_vcd, "also write the golden-run VCD here");

  ClusterOpts co;
  CLI::App* cluster = app.add_subcommand("cluster", "group FFs on the standardized features");
  cluster->add_option("--features", co.features, "features.std.csv")->required();
  cluster->add_option("--algo", co.algo, "kmeans|agglo|meanshift");
  cluster->add_option("--k", co.k, "cluster count");
  cluster->add_option("--target-frac", co.target_frac, "cluster count as a fraction of FFs");
  cluster->add_option("--bandwidth", co.bandwidth, "mean-shift window size");
  cluster->add_option("--w-lo", co.w_lo, "bandwidth search bracket low");
  cluster->add_option("--w-hi", co.w_hi, "bandwidth search bracket high");
  cluster->add_option("--max-iter", co.max_iter, "iteration cap");
  cluster->add_option("--restarts", co.restarts, "k-means restarts");
  cluster->add_option("--tol", co.tol, "k-means relative inertia tolerance");

  InjectOpts in;
  CLI::App* inject = app.add_subcommand("inject", "run an SEU injection campaign");
  inject->add_option("--netlist", in.netlist, "netlist JSON")->required();
  inject->add_option("--workload", in.workload, "workload JSON")->required();
  inject->add_option("--granularity", in.granularity, "ff|cluster");
  inject->add_option("--clusters", in.clusters, "clusters.csv (cluster granularity)");
  inject->add_option("--n-per-target", in.n_per_target, "injections per target");

  EvaluateOpts ev;
  CLI::App* evaluate = app.add_subcommand("evaluate", "rank clusters and build curves");
  evaluate->add_option("--campaign", ev.campaign, "per-FF campaign.csv")->required();
  evaluate->add_option("--clusters", ev.clusters, "clusters.csv")->required();
  evaluate->add_option("--features", ev.features, "features.std.csv")->required();
  evaluate->add_option("--n-random", ev.n_random, "random baseline runs");

  BenchOpts be;
  CLI::App* bench = app.add_subcommand("bench-gen", "generate a synthetic benchmark");
  bench->add_option("--blocks", be.blocks, "block count");
  bench->add_option("--kinds", be.kinds, "allowed block kinds")->delimiter(',');
  bench->add_option("--min-ff", be.min_ff, "min FFs per block");
  bench->add_option("--max-ff", be.max_ff, "max FFs per block");
  bench->add_option("--bus-frac", be.bus_frac, "fraction of blocks declared as buses");
  bench->add_option("--horizon", be.horizon, "workload length in cycles");

  ReportOpts re;
  CLI::App* report = app.add_subcommand("report", "summarize stage outputs as text");
  report->add_option("--campaign", re.campaign, "campaign.csv");
  report->add_option("--clusters", re.clusters, "clusters.csv");
  report->add_option("--curves", re.curves, "curve.csv");
  report->add_option("--quality", re.quality, "quality.json");

  try {
    app.parse(argc, argv);
    if (extract->parsed()) return cmd_extract(g, ex);
    if (cluster->parsed()) return cmd_cluster(g, co);
    if (inject->parsed()) return cmd_inject(g, in);
    if (evaluate->parsed()) return cmd_evaluate(g, ev);
    if (bench->parsed()) return cmd_bench_gen(g, be);
    if (report->parsed()) return cmd_report(g, re);
    return 2;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const ffc::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: bad input file: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
}
