#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "pfn/core/error.hpp"
#include "pfn/eval/metrics.hpp"

using namespace pfn;

namespace {

Prediction interval(double lo, double mean, double hi) {
  Prediction p;
  p.q025 = lo;
  p.mean = mean;
  p.q500 = mean;
  p.q975 = hi;
  return p;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::config;
}

MetricReport runtime_report(const std::string& bid, const std::string& method, const std::string& scenario,
                            PhaseTimes runtime, Index tasks, const std::string& benchmark = "bench1") {
  MetricReport r;
  r.benchmark = benchmark;
  r.method = method;
  r.scenario = scenario;
  r.bid = bid;
  r.target = "su";
  r.groups = {GroupMetric{"B1", 4, 1.0, 0.75}};
  r.runtime = std::move(runtime);
  r.tasks = tasks;
  return r;
}

std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("pfn_eval_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST(Rmse, Examples) {
  EXPECT_EQ(rmse({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}), 0.0);
  EXPECT_NEAR(rmse({0.0, 0.0}, {3.0, 4.0}), 3.53553, 1e-5);
  EXPECT_EQ(kind_of([] { rmse({1.0}, {1.0, 2.0}); }), ErrorKind::contract);
  EXPECT_EQ(kind_of([] { rmse({}, {}); }), ErrorKind::contract);
}

TEST(Rmse, MatchesTwoPassFormula) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal(0.0, 5.0);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> a(257), b(257);
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = normal(rng);
      b[i] = normal(rng);
    }
    // First pass: differences; second pass: mean of squares in long double.
    std::vector<long double> diff(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) diff[i] = static_cast<long double>(a[i]) - b[i];
    long double ms = 0.0L;
    for (auto d : diff) ms += d * d / static_cast<long double>(diff.size());
    EXPECT_NEAR(rmse(a, b), static_cast<double>(std::sqrt(ms)), 1e-9);
    EXPECT_GT(rmse(a, b), 0.0);
  }
}

TEST(Coverage, Examples) {
  std::vector<Prediction> preds(20, interval(0.0, 0.5, 1.0));
  std::vector<double> truths(20, 0.5);
  truths[7] = 2.0;
  EXPECT_DOUBLE_EQ(coverage95(preds, truths), 0.95);
  EXPECT_DOUBLE_EQ(coverage95({interval(0.0, 0.5, 1.0)}, {1.0}), 1.0);
  EXPECT_DOUBLE_EQ(coverage95({interval(0.0, 0.5, 1.0)}, {0.0}), 1.0);
  EXPECT_DOUBLE_EQ(coverage95({interval(2.0, 2.0, 2.0)}, {2.0}), 1.0);
  EXPECT_EQ(kind_of([] { coverage95({interval(0, 0, 1)}, {1.0, 2.0}); }), ErrorKind::contract);
}

TEST(Coverage, InvariantUnderIncreasingTransform) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Prediction> preds, moved;
  std::vector<double> truths, moved_truths;
  auto f = [](double v) { return v * v * v + v; };
  for (int i = 0; i < 500; ++i) {
    const double c = normal(rng), w = std::abs(normal(rng)), t = normal(rng);
    preds.push_back(interval(c - w, c, c + w));
    truths.push_back(t);
    moved.push_back(interval(f(c - w), f(c), f(c + w)));
    moved_truths.push_back(f(t));
  }
  EXPECT_EQ(coverage95(preds, truths), coverage95(moved, moved_truths));
}

TEST(Timeit, NoOpAndNesting) {
  PhaseTimes times;
  const double s = timeit(times, "noop", [] {});
  EXPECT_LT(s, 0.01);
  const auto [value, parent] = timeit(times, "outer", [&] {
    timeit(times, "inner_a", [] { std::this_thread::sleep_for(std::chrono::milliseconds(5)); });
    timeit(times, "inner_b", [] { std::this_thread::sleep_for(std::chrono::milliseconds(5)); });
    return 42;
  });
  EXPECT_EQ(value, 42);
  EXPECT_LE(times["inner_a"] + times["inner_b"], parent + 0.001);
  EXPECT_GE(times["inner_a"], 0.005);
  EXPECT_EQ(times["outer"], parent);
}

TEST(MetricReport, PooledMatchesGroups) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal(0.0, 1.0);
  MetricReport r;
  r.benchmark = "bench1";
  r.method = "PFN";
  std::vector<double> all_means, all_truths;
  for (int g = 0; g < 4; ++g) {
    std::vector<Prediction> preds;
    std::vector<double> truths;
    for (int i = 0; i < 10 + 7 * g; ++i) {
      const double m = normal(rng);
      preds.push_back(interval(m - 1, m, m + 1));
      truths.push_back(normal(rng));
      all_means.push_back(m);
      all_truths.push_back(truths.back());
    }
    r.groups.push_back(group_metric("B" + std::to_string(g), preds, truths));
  }
  EXPECT_NEAR(r.pooled_rmse() * r.pooled_rmse(), rmse(all_means, all_truths) * rmse(all_means, all_truths), 1e-9);
  EXPECT_EQ(r.total_n(), static_cast<Index>(all_truths.size()));
}

TEST(MetricReport, ValidationAndJsonRoundTrip) {
  auto r = runtime_report("Local-BID/4", "PFN", "individual", {{"context_build", 0.5}, {"inference", 1.25}}, 5);
  r.runtime_note = "forward pass only";
  r.manifest = "manifest.json";
  nlohmann::json j = r;
  EXPECT_EQ(j.get<MetricReport>(), r);
  auto bad = r;
  bad.groups[0].coverage = 1.5;
  EXPECT_EQ(kind_of([&] { bad.validate(); }), ErrorKind::contract);
  bad = r;
  bad.groups.push_back(bad.groups[0]);
  EXPECT_EQ(kind_of([&] { bad.validate(); }), ErrorKind::contract);
  bad.groups.clear();
  EXPECT_EQ(kind_of([&] { bad.validate(); }), ErrorKind::contract);
}

TEST(Tables, Table1RowFromReferenceRuntimes) {
  const std::vector<MetricReport> reports{
      runtime_report("Local-BID/4", "HBM", "individual", {{"fit", 2400.0}, {"inference", 110.0}}, 1),
      runtime_report("Local-BID/4", "PFN", "individual", {{"context_build", 85.0}, {"inference", 7600.0}}, 5),
      runtime_report("Local-BID/4", "PFN", "simultaneous", {{"context_build", 9.0}, {"inference", 1550.0}}, 1),
      runtime_report("Cluster-BID/4", "HBM", "individual", {{"fit", 600.0}, {"inference", 5.0}}, 5),
      runtime_report("Cluster-BID/4", "PFN", "individual", {{"inference", 70.0}}, 5),
  };
  const auto rows = table1_rows(reports);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(render_table1_row(rows[0]), "Local-BID/4 | HBM 2510 | individual 1537 | simultaneous 1559");
  EXPECT_EQ(render_table1_row(rows[1]), "Cluster-BID/4 | HBM 121 | individual 14 | simultaneous N/A");
  EXPECT_NE(render_table1(reports).find("Pre-training is excluded"), std::string::npos);
}

TEST(Tables, Table2Row) {
  EXPECT_EQ(render_table2_row(452.0, 2923.0), "HBM 452 / PFN-total 2923");
  std::vector<MetricReport> reports{runtime_report("Local-BID/11", "HBM", "imputation", {{"fit", 400.0}, {"inference", 52.0}}, 5, "bench2"),
                                    runtime_report("Local-BID/11", "PFN", "imputation", {{"inference", 2900.0}, {"context_build", 23.0}}, 14, "bench2")};
  EXPECT_NE(render_table2(reports).find("HBM 452 / PFN-total 2923"), std::string::npos);
  EXPECT_EQ(format_seconds(0.01234), "0.0123");
  EXPECT_EQ(format_seconds(85.0), "85");
}

TEST(Report, WritesFilesAndRejectsBadInput) {
  const auto dir = temp_dir("single");
  const auto files = write_report(dir, {runtime_report("Local-BID/4", "PFN", "individual", {{"inference", 1.0}}, 1)});
  std::ifstream csv(dir / "metrics.csv");
  std::string header, row, extra;
  std::getline(csv, header);
  std::getline(csv, row);
  EXPECT_EQ(header, kMetricsCsvHeader);
  EXPECT_EQ(row, "bench1,PFN,individual,Local-BID/4,su,B1,4,1,0.75");
  EXPECT_FALSE(static_cast<bool>(std::getline(csv, extra)));
  std::ifstream js(dir / "metrics.json");
  const auto back = nlohmann::json::parse(js).get<std::vector<MetricReport>>();
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].groups[0].group, "B1");

  const auto empty_dir = temp_dir("empty");
  EXPECT_EQ(kind_of([&] { write_report(empty_dir, {}); }), ErrorKind::contract);
  EXPECT_FALSE(std::filesystem::exists(empty_dir / "metrics.csv"));

  const auto r = runtime_report("Local-BID/4", "PFN", "individual", {{"inference", 1.0}}, 1);
  EXPECT_EQ(kind_of([&] { write_report(temp_dir("conflict"), {r, r}); }), ErrorKind::contract);
}

TEST(ProfileSvg, DrawsBandsMeansAndTruths) {
  ProfileSeries s{"PFN", {}};
  for (int i = 0; i < 5; ++i) s.points.push_back({1.0 + i, 20.0 + i, interval(15.0 + i, 20.0 + i, 25.0 + i)});
  const auto svg = profile_svg("B1 <su>", "su (kPa)", {s});
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("<polygon"), std::string::npos);
  EXPECT_NE(svg.find("<polyline"), std::string::npos);
  EXPECT_NE(svg.find("B1 &lt;su&gt;"), std::string::npos);
  std::size_t circles = 0;
  for (auto p = svg.find("<circle"); p != std::string::npos; p = svg.find("<circle", p + 1)) ++circles;
  EXPECT_EQ(circles, 5u);
}
