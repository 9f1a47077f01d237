#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "doctest.h"
#include "ffc/cluster.hpp"
#include "ffc/evaluate.hpp"
#include "ffc/io.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kBin = FFCLUST_BIN;

int run(const std::string& args) {
  const int status = std::system((kBin + " " + args).c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("ffclust_test_" + tag + "_" + std::to_string(getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
  std::string str() const { return path.string(); }
};

}  // namespace

TEST_CASE("pipeline smoke test: bench-gen to report, exit 0 everywhere") {
  TempDir dir("smoke");
  const std::string out = " --out-dir " + dir.str();

  CHECK(run("--seed 5" + out + " bench-gen --blocks 5 --min-ff 4 --max-ff 10 --horizon 256") == 0);
  CHECK(fs::exists(dir / "netlist.json"));
  CHECK(fs::exists(dir / "workload.json"));
  CHECK(fs::exists(dir / "blocks.csv"));

  CHECK(run("--seed 5" + out + " extract --netlist " + (dir / "netlist.json") +
            " --activity simulate --workload " + (dir / "workload.json")) == 0);
  CHECK(fs::exists(dir / "features.raw.csv"));
  CHECK(fs::exists(dir / "features.std.csv"));

  CHECK(run("--seed 5" + out + " cluster --features " + (dir / "features.std.csv") +
            " --algo kmeans --target-frac 0.2") == 0);
  CHECK(fs::exists(dir / "clusters.csv"));
  CHECK(fs::exists(dir / "clusters.json"));

  CHECK(run("--seed 5 --threads 2" + out + " inject --netlist " + (dir / "netlist.json") +
            " --workload " + (dir / "workload.json") + " --granularity ff --n-per-target 40") ==
        0);
  CHECK(fs::exists(dir / "campaign.csv"));

  CHECK(run("--seed 5" + out + " evaluate --campaign " + (dir / "campaign.csv") +
            " --clusters " + (dir / "clusters.csv") + " --features " +
            (dir / "features.std.csv") + " --n-random 20") == 0);
  CHECK(fs::exists(dir / "curve.csv"));
  CHECK(fs::exists(dir / "quality.json"));

  CHECK(run(out + " report --campaign " + (dir / "campaign.csv") + " --clusters " +
            (dir / "clusters.csv") + " --curves " + (dir / "curve.csv") + " --quality " +
            (dir / "quality.json") + " > /dev/null") == 0);
  const std::string report = ffc::slurp(dir / "report.txt");
  CHECK(report.find("mitigation curves") != std::string::npos);

  // Per-cluster campaign: the report states the effort reduction factor.
  TempDir cdir("smoke_cluster");
  CHECK(run("--seed 5 --out-dir " + cdir.str() + " inject --netlist " + (dir / "netlist.json") +
            " --workload " + (dir / "workload.json") +
            " --granularity cluster --clusters " + (dir / "clusters.csv") +
            " --n-per-target 40") == 0);
  CHECK(run("--out-dir " + cdir.str() + " report --campaign " + (cdir / "campaign.csv") +
            " --clusters " + (dir / "clusters.csv") + " > /dev/null") == 0);
  CHECK(ffc::slurp(cdir / "report.txt").find("fewer injections") != std::string::npos);

  // Every stage leaves a run.json.
  for (const char* stage : {"bench-gen", "extract", "cluster", "inject", "evaluate"})
    CHECK(fs::exists(dir / (std::string(stage) + ".run.json")));
}

TEST_CASE("vcd and simulate activity paths produce identical features") {
  TempDir dir("vcd");
  const std::string out = " --out-dir " + dir.str();
  REQUIRE(run("--seed 8" + out + " bench-gen --blocks 4 --min-ff 4 --max-ff 8 --horizon 128") ==
          0);

  TempDir sim_dir("vcd_sim");
  REQUIRE(run("--seed 8 --out-dir " + sim_dir.str() + " extract --netlist " +
              (dir / "netlist.json") + " --activity simulate --workload " +
              (dir / "workload.json") + " --emit-vcd " + (dir / "golden.vcd")) == 0);

  TempDir vcd_dir("vcd_vcd");
  REQUIRE(run("--seed 8 --out-dir " + vcd_dir.str() + " extract --netlist " +
              (dir / "netlist.json") + " --activity vcd --vcd " + (dir / "golden.vcd")) == 0);

  CHECK(ffc::slurp(sim_dir / "features.raw.csv") == ffc::slurp(vcd_dir / "features.raw.csv"));
  CHECK(ffc::slurp(sim_dir / "features.std.csv") == ffc::slurp(vcd_dir / "features.std.csv"));

  // Restricting the activity window changes the activity columns.
  TempDir win_dir("vcd_win");
  REQUIRE(run("--seed 8 --out-dir " + win_dir.str() + " extract --netlist " +
              (dir / "netlist.json") + " --activity simulate --workload " +
              (dir / "workload.json") + " --window-start 32 --window-end 64") == 0);
  CHECK(ffc::slurp(win_dir / "features.raw.csv") != ffc::slurp(sim_dir / "features.raw.csv"));
}

TEST_CASE("reruns are byte-identical; seeds actually steer results") {
  TempDir dir("determinism");
  const std::string out = " --out-dir " + dir.str();
  REQUIRE(run("--seed 11" + out + " bench-gen --blocks 4 --min-ff 4 --max-ff 8 --horizon 128") ==
          0);
  REQUIRE(run("--seed 11" + out + " extract --netlist " + (dir / "netlist.json") +
              " --activity simulate --workload " + (dir / "workload.json")) == 0);

  TempDir c1("clu1"), c2("clu2"), c3("clu3");
  for (const auto* d : {&c1, &c2}) {
    REQUIRE(run("--seed 11 --out-dir " + d->str() + " cluster --features " +
                (dir / "features.std.csv") + " --algo meanshift --target-frac 0.2") == 0);
  }
  CHECK(ffc::slurp(c1 / "clusters.csv") == ffc::slurp(c2 / "clusters.csv"));
  CHECK(ffc::slurp(c1 / "cluster.run.json") == ffc::slurp(c2 / "cluster.run.json"));

  // Forcing the scalar kernels must not change a single byte.
  REQUIRE(std::system(("FFC_KERNELS=scalar " + kBin + " --seed 11 --out-dir " + c3.str() +
                       " cluster --features " + (dir / "features.std.csv") +
                       " --algo meanshift --target-frac 0.2")
                          .c_str()) == 0);
  CHECK(ffc::slurp(c1 / "clusters.csv") == ffc::slurp(c3 / "clusters.csv"));

  TempDir i1("inj1"), i2("inj2"), i3("inj3");
  const std::string inject_args = " inject --netlist " + (dir / "netlist.json") +
                                  " --workload " + (dir / "workload.json") +
                                  " --granularity ff --n-per-target 30";
  REQUIRE(run("--seed 11 --threads 1 --out-dir " + i1.str() + inject_args) == 0);
  REQUIRE(run("--seed 11 --threads 4 --out-dir " + i2.str() + inject_args) == 0);
  REQUIRE(run("--seed 12 --threads 2 --out-dir " + i3.str() + inject_args) == 0);
  CHECK(ffc::slurp(i1 / "campaign.csv") == ffc::slurp(i2 / "campaign.csv"));
  CHECK(ffc::slurp(i1 / "campaign.csv") != ffc::slurp(i3 / "campaign.csv"));
  // Same schema either way.
  CHECK(ffc::parse_campaign_csv(ffc::slurp(i3 / "campaign.csv")).size() ==
        ffc::parse_campaign_csv(ffc::slurp(i1 / "campaign.csv")).size());
}

TEST_CASE("cluster --target-frac maps through the rounding rule") {
  TempDir dir("frac");
  const std::string out = " --out-dir " + dir.str();
  REQUIRE(run("--seed 31" + out + " bench-gen --blocks 8 --min-ff 10 --max-ff 16 --horizon 64") ==
          0);
  REQUIRE(run("--seed 31" + out + " extract --netlist " + (dir / "netlist.json") +
              " --activity simulate --workload " + (dir / "workload.json")) == 0);
  REQUIRE(run("--seed 31" + out + " cluster --features " + (dir / "features.std.csv") +
              " --algo agglo --target-frac 0.10") == 0);
  const ffc::Clustering cl = ffc::parse_clusters_csv(ffc::slurp(dir / "clusters.csv"));
  CHECK(cl.n_clusters == ffc::target_count(cl.ff_names.size(), 0.10));

  const json sidecar = json::parse(ffc::slurp(dir / "clusters.json"));
  CHECK(sidecar.at("algorithm") == "agglomerative");
  CHECK(sidecar.at("n_clusters").get<std::uint32_t>() == cl.n_clusters);

  // Explicit --k: dense ids 0..4 (parse_clusters_csv enforces density).
  REQUIRE(run("--seed 31" + out + " cluster --features " + (dir / "features.std.csv") +
              " --algo kmeans --k 5") == 0);
  CHECK(ffc::parse_clusters_csv(ffc::slurp(dir / "clusters.csv")).n_clusters == 5);
}

TEST_CASE("singleton clustering reproduces the ideal curve through the CLI") {
  TempDir dir("single");
  const std::string out = " --out-dir " + dir.str();
  REQUIRE(run("--seed 13" + out + " bench-gen --blocks 4 --min-ff 4 --max-ff 7 --horizon 128") ==
          0);
  REQUIRE(run("--seed 13" + out + " extract --netlist " + (dir / "netlist.json") +
              " --activity simulate --workload " + (dir / "workload.json")) == 0);
  const ffc::FeatureMatrix m = ffc::parse_features_csv(ffc::slurp(dir / "features.std.csv"));
  REQUIRE(run("--seed 13" + out + " cluster --features " + (dir / "features.std.csv") +
              " --algo agglo --k " + std::to_string(m.rows())) == 0);
  REQUIRE(run("--seed 13" + out + " inject --netlist " + (dir / "netlist.json") +
              " --workload " + (dir / "workload.json") + " --n-per-target 50") == 0);
  REQUIRE(run("--seed 13" + out + " evaluate --campaign " + (dir / "campaign.csv") +
              " --clusters " + (dir / "clusters.csv") + " --features " +
              (dir / "features.std.csv") + " --n-random 10") == 0);
  const auto curves = ffc::parse_curves_csv(ffc::slurp(dir / "curve.csv"));
  const ffc::MitigationCurve* clustered = nullptr;
  const ffc::MitigationCurve* ideal = nullptr;
  for (const auto& c : curves) {
    if (c.strategy.rfind("clustered", 0) == 0) clustered = &c;
    if (c.strategy == "ideal") ideal = &c;
  }
  REQUIRE(clustered);
  REQUIRE(ideal);
  CHECK(clustered->residuals == ideal->residuals);
}

TEST_CASE("bad inputs exit with code 2 and name the problem") {
  TempDir dir("errs");
  CHECK(run("--out-dir " + dir.str() +
            " extract --netlist /nonexistent/net.json --activity simulate --workload w.json"
            " 2> " +
            (dir / "err.txt")) == 2);
  CHECK(ffc::slurp(dir / "err.txt").find("/nonexistent/net.json") != std::string::npos);

  CHECK(run("--out-dir " + dir.str() + " evaluate --campaign missing.csv --clusters x.csv"
            " --features f.csv 2> /dev/null") == 2);
  CHECK(run("frobnicate 2> /dev/null") == 2);
  CHECK(run("cluster 2> /dev/null") == 2);  // missing required --features
  CHECK(run("--help > /dev/null") == 0);
}
