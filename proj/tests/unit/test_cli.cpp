#include <gtest/gtest.h>

#include <cstdlib>
#include <random>
#include <sstream>

#include "pfn/app/cli.hpp"
#include "pfn/core/io.hpp"
#include "pfn/geodata/records.hpp"
#include "pfn/model/checkpoint.hpp"
#include "pfn/model/params.hpp"

namespace pfn::app {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result pfn(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("pfn_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Untrained network: enough to exercise the plumbing deterministically.
fs::path fresh_checkpoint(const fs::path& dir, int max_features) {
  Checkpoint c;
  c.model.embed_dim = 16;
  c.model.n_layers = 1;
  c.model.n_heads = 2;
  c.model.mlp_hidden = 16;
  c.model.n_bins = 12;
  c.model.max_features = max_features;
  c.model.max_rows = 400;
  std::vector<double> s;
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < 2000; ++i) s.push_back(n(rng));
  c.bars = equal_mass_layout(s, c.model.n_bins);
  c.weights = init_parameters<float>(c.model, 2);
  const auto path = dir / "fresh.pfn";
  save_checkpoint(path, c);
  return path;
}

void write(const fs::path& p, const std::string& text) { write_file_atomic(p, text); }

TEST(Cli, MissingConfigExitsTwoAndNamesThePath) {
  const auto r = pfn({"synth", "--config", "/no/such/config.json"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("/no/such/config.json"), std::string::npos);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(pfn({}).code, 2);
  EXPECT_EQ(pfn({"frobnicate"}).code, 2);
  EXPECT_EQ(pfn({"bench1", "--view", "7"}).code, 2);
  EXPECT_EQ(pfn({"bench1", "--scenario", "sideways"}).code, 2);
  EXPECT_EQ(pfn({"bench1"}).code, 2);  // no checkpoint
  EXPECT_EQ(pfn({"--help"}).code, 0);
}

TEST(Cli, SynthRerunFromManifestIsBitIdentical) {
  const auto dir = scratch("synth");
  write(dir / "cfg.json", R"({"verification": [1350, 1350, 1650, 1650]})");
  ASSERT_EQ(pfn({"synth", "--config", (dir / "cfg.json").string(), "--seed", "9", "--out", (dir / "a").string()}).code, 0);
  ASSERT_EQ(pfn({"synth", "--config", (dir / "a/manifest.json").string(), "--out", (dir / "b").string()}).code, 0);
  for (const char* f : {"site.csv", "truth.csv", "bid.csv", "verification.csv"})
    EXPECT_EQ(read_file(dir / "a" / f), read_file(dir / "b" / f)) << f;
  const auto manifest = read_json_file(dir / "a/manifest.json");
  EXPECT_EQ(manifest["config"]["seed"], 9);
  EXPECT_EQ(manifest["outputs"].size(), 4u);

  ASSERT_EQ(pfn({"synth", "--config", (dir / "cfg.json").string(), "--seed", "10", "--out", (dir / "c").string()}).code, 0);
  EXPECT_NE(read_file(dir / "a/site.csv"), read_file(dir / "c/site.csv"));
}

TEST(Cli, MalformedTableIsDataError) {
  const auto dir = scratch("malformed");
  const auto ckpt = fresh_checkpoint(dir, 16);
  write(dir / "t.csv", "site_id,borehole_id,x,y,depth\nS,B1,0,0,1\n");
  const auto r = pfn({"impute", (dir / "t.csv").string(), "--checkpoint", ckpt.string(), "--out", dir.string()});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("missing column"), std::string::npos);
}

class CliSite : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = scratch("site");
    write(dir_ / "cfg.json", R"({"verification": [1350, 1350, 1650, 1650]})");
    ASSERT_EQ(pfn({"synth", "--config", (dir_ / "cfg.json").string(), "--out", (dir_ / "site").string()}).code, 0);
  }
  static fs::path dir_;
};
fs::path CliSite::dir_;

TEST_F(CliSite, CapacityErrorExitsFourWithTaskId) {
  const auto ckpt = fresh_checkpoint(dir_, 4);
  const auto r = pfn({"impute", (dir_ / "site/verification.csv").string(), (dir_ / "site/bid.csv").string(),
                      "--checkpoint", ckpt.string(), "--view", "11", "--out", (dir_ / "cap").string()});
  EXPECT_EQ(r.code, 4);
  EXPECT_NE(r.err.find("fill:verification"), std::string::npos);
}

TEST_F(CliSite, ImputeFillsEveryMissingRowReproducibly) {
  const auto ckpt = fresh_checkpoint(dir_, 16);
  const auto table = dir_ / "site/verification.csv";
  ASSERT_EQ(pfn({"impute", table.string(), (dir_ / "site/bid.csv").string(), "--checkpoint", ckpt.string(), "--out",
                 (dir_ / "imp").string()})
                .code,
            0);
  const auto original = load_csv(table);
  const auto filled = load_csv(dir_ / "imp/filled.csv");
  std::size_t missing = 0;
  for (std::size_t i = 0; i < original.records.size(); ++i) {
    if (!original.records[i].has(Param::su)) ++missing;
    EXPECT_TRUE(filled.records[i].has(Param::su));
  }
  const auto manifest = read_json_file(dir_ / "imp/manifest.json");
  EXPECT_EQ(manifest["details"]["task"]["n_test"], missing);

  ASSERT_EQ(pfn({"impute", "--config", (dir_ / "imp/manifest.json").string(), "--out", (dir_ / "imp2").string()}).code, 0);
  EXPECT_EQ(read_file(dir_ / "imp/predictions.csv"), read_file(dir_ / "imp2/predictions.csv"));
  EXPECT_EQ(read_file(dir_ / "imp/filled.csv"), read_file(dir_ / "imp2/filled.csv"));
}

class CliBench : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = scratch("bench");
    ckpt_ = fresh_checkpoint(dir_, 16);
    write(dir_ / "cfg.json", R"({"checkpoint": ")" + ckpt_.string() +
                                  R"(", "seed": 3, "hbm": {"burn_in": 100, "draws": 200}})");
  }
  static fs::path dir_, ckpt_;
};
fs::path CliBench::dir_;
fs::path CliBench::ckpt_;

TEST_F(CliBench, Bench1TaskCountsAndTable) {
  const auto r = pfn({"bench1", "--config", (dir_ / "cfg.json").string(), "--out", (dir_ / "b1").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto manifest = read_json_file(dir_ / "b1/manifest.json");
  int individual = 0, simultaneous = 0;
  for (const auto& t : manifest["details"]["tasks"]) {
    if (t["scenario"] == "individual") ++individual;
    if (t["scenario"] == "simultaneous") ++simultaneous;
  }
  EXPECT_EQ(individual, 20);
  EXPECT_EQ(simultaneous, 3);
  const auto runtime = read_file(dir_ / "b1/runtime.txt");
  for (const char* bid : {"Cluster-BID/4 | HBM", "Local-BID-V/4 | HBM", "Local-BID/4 | HBM", "Global-BID/4 | HBM"})
    EXPECT_NE(runtime.find(bid), std::string::npos) << bid;
  EXPECT_NE(runtime.find("simultaneous N/A"), std::string::npos);
  const auto csv = read_file(dir_ / "b1/metrics.csv");
  EXPECT_EQ(csv.find("runtime"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir_ / "b1/plots/Local-BID_4_B1.svg"));

  ASSERT_EQ(pfn({"bench1", "--config", (dir_ / "b1/manifest.json").string(), "--out", (dir_ / "b1r").string()}).code, 0);
  EXPECT_EQ(csv, read_file(dir_ / "b1r/metrics.csv"));
  EXPECT_EQ(read_file(dir_ / "b1/predictions.csv"), read_file(dir_ / "b1r/predictions.csv"));
}

TEST_F(CliBench, Bench1FlagsFilterBidViewAndScenario) {
  const auto r = pfn({"bench1", "--config", (dir_ / "cfg.json").string(), "--bid", "Local-BID/11", "--view", "11",
                      "--scenario", "individual", "--out", (dir_ / "b1f").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto manifest = read_json_file(dir_ / "b1f/manifest.json");
  EXPECT_EQ(manifest["details"]["tasks"].size(), 5u);
  EXPECT_EQ(manifest["config"]["view"], 11);
  for (const auto& t : manifest["details"]["tasks"]) EXPECT_EQ(t["features"].size(), 13u);
  EXPECT_EQ(pfn({"bench1", "--config", (dir_ / "cfg.json").string(), "--bid", "Nowhere-BID"}).code, 2);
}

TEST_F(CliBench, Bench2FourteenTasksFiveParameterRows) {
  const auto r = pfn({"bench2", "--config", (dir_ / "cfg.json").string(), "--out", (dir_ / "b2").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto manifest = read_json_file(dir_ / "b2/manifest.json");
  EXPECT_EQ(manifest["details"]["tasks"].size(), 14u);
  const double sum = manifest["details"]["task_seconds_sum"];
  const double total = manifest["details"]["pfn_total_seconds"];
  EXPECT_NEAR(total, sum, 0.01 * sum);
  const auto csv = read_file(dir_ / "b2/metrics.csv");
  std::size_t pfn_rows = 0;
  for (std::size_t p = csv.find("bench2,PFN,"); p != std::string::npos; p = csv.find("bench2,PFN,", p + 1)) ++pfn_rows;
  EXPECT_EQ(pfn_rows, 5u);

  ASSERT_EQ(pfn({"bench2", "--config", (dir_ / "b2/manifest.json").string(), "--out", (dir_ / "b2r").string()}).code, 0);
  EXPECT_EQ(csv, read_file(dir_ / "b2r/metrics.csv"));
  EXPECT_EQ(read_file(dir_ / "b2/predictions.csv"), read_file(dir_ / "b2r/predictions.csv"));

  ASSERT_EQ(pfn({"report", (dir_ / "b2").string(), "--out", (dir_ / "rep").string()}).code, 0);
  EXPECT_EQ(csv, read_file(dir_ / "rep/metrics.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "rep/plots/su.svg"));
}

TEST_F(CliBench, ThreadCountDoesNotChangeResults) {
  const auto cfg = (dir_ / "cfg.json").string();
  ::setenv("PFN_SITE_THREADS", "1", 1);
  ASSERT_EQ(pfn({"bench2", "--config", cfg, "--out", (dir_ / "t1").string()}).code, 0);
  ::setenv("PFN_SITE_THREADS", "3", 1);
  ASSERT_EQ(pfn({"bench2", "--config", cfg, "--out", (dir_ / "t3").string()}).code, 0);
  ::setenv("PFN_SITE_THREADS", "zero", 1);
  EXPECT_EQ(pfn({"bench2", "--config", cfg, "--out", (dir_ / "tz").string()}).code, 2);
  ::unsetenv("PFN_SITE_THREADS");
  EXPECT_EQ(read_file(dir_ / "t1/predictions.csv"), read_file(dir_ / "t3/predictions.csv"));
}

TEST(Cli, PretrainSameSeedGivesIdenticalCheckpoint) {
  const auto dir = scratch("pretrain");
  write(dir / "cfg.json", R"({
    "prior": {"family": "scm", "features": [1, 3], "rows": [12, 24]},
    "model": {"embed_dim": 16, "n_layers": 1, "n_heads": 2, "mlp_hidden": 16, "n_bins": 12, "max_features": 4, "max_rows": 64},
    "train": {"steps": 3, "tasks_per_step": 2, "warmup_steps": 1, "val_tasks": 4, "val_every": 3, "bin_fit_tasks": 50}
  })");
  for (const char* run : {"a", "b"}) {
    const auto r = pfn({"pretrain", "--config", (dir / "cfg.json").string(), "--seed", "4", "--out", (dir / run).string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("final validation NLL"), std::string::npos);
  }
  EXPECT_EQ(fingerprint(read_file(dir / "a/checkpoint.pfn")), fingerprint(read_file(dir / "b/checkpoint.pfn")));
  EXPECT_EQ(read_json_file(dir / "a/manifest.json")["outputs"], read_json_file(dir / "b/manifest.json")["outputs"]);
}

}  // namespace
}  // namespace pfn::app
