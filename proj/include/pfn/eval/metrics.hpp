#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pfn/infer/predictive.hpp"

namespace pfn {

/// Root mean squared error; contract error on length mismatch or empty input.
double rmse(const std::vector<double>& means, const std::vector<double>& truths);

/// Truth inside the closed interval [q025, q975].
bool covers(const Prediction& p, double truth);

/// Fraction of truths inside their closed 95% interval.
double coverage95(const std::vector<Prediction>& predictions, const std::vector<double>& truths);

/// Accumulated wall-clock seconds per phase label.
using PhaseTimes = std::map<std::string, double>;

/// Runs `f`, adds its monotonic-clock duration to `times[phase]` and returns
/// (result, seconds), or just the seconds when `f` returns void.
template <class F>
auto timeit(PhaseTimes& times, const std::string& phase, F&& f) {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  auto seconds = [&] {
    const double s = std::chrono::duration<double>(Clock::now() - start).count();
    times[phase] += s;
    return s;
  };
  if constexpr (std::is_void_v<std::invoke_result_t<F>>) {
    std::forward<F>(f)();
    return seconds();
  } else {
    auto result = std::forward<F>(f)();
    const double s = seconds();
    return std::pair<decltype(result), double>(std::move(result), s);
  }
}

struct GroupMetric {
  std::string group;
  Index n = 0;
  double rmse = 0.0;
  double coverage = 0.0;

  bool operator==(const GroupMetric&) const = default;
};

GroupMetric group_metric(const std::string& group, const std::vector<Prediction>& predictions,
                         const std::vector<double>& truths);

/// Metrics of one (benchmark, method, scenario, BID, target) run.
struct MetricReport {
  std::string benchmark;
  std::string method;
  std::string scenario;
  std::string bid;
  std::string target;
  std::vector<GroupMetric> groups;
  /// Seconds per phase: context_build and inference for the network, fit and inference for the baseline.
  PhaseTimes runtime;
  /// Tasks (or fits) the runtime covers.
  Index tasks = 1;
  std::string runtime_note;
  std::string manifest;

  /// Contract error on coverage outside [0, 1], empty groups or duplicate group names.
  void validate() const;
  Index total_n() const;
  /// Square root of the n-weighted mean of the group MSEs.
  double pooled_rmse() const;
  double pooled_coverage() const;
  double total_seconds() const;

  bool operator==(const MetricReport&) const = default;
};

void to_json(nlohmann::json& j, const MetricReport& r);
void from_json(const nlohmann::json& j, MetricReport& r);

inline constexpr const char* kMetricsCsvHeader = "benchmark,method,scenario,bid,target,group,n,rmse,coverage95";

/// One CSV row per group. Runtime is left out so the file is reproducible.
std::string metrics_csv(const std::vector<MetricReport>& reports);

struct Table1Row {
  std::string bid;
  std::optional<double> hbm;
  std::optional<double> individual;
  std::optional<double> simultaneous;
};

/// Runtime seconds as printed in tables: whole seconds from 100 up, else 3 significant digits.
std::string format_seconds(double s);

/// "Local-BID/4 | HBM 2510 | individual 1537 | simultaneous 1559", N/A for absent cells.
std::string render_table1_row(const Table1Row& row);
/// Rows per BID in first-seen order: baseline fit+inference and average individual time per
/// task, simultaneous total.
std::vector<Table1Row> table1_rows(const std::vector<MetricReport>& reports);
std::string render_table1(const std::vector<MetricReport>& reports);

/// "HBM 452 / PFN-total 2923".
std::string render_table2_row(double hbm_seconds, double pfn_total_seconds);
std::string render_table2(const std::vector<MetricReport>& reports);

/// One depth point of a profile chart.
struct ProfilePoint {
  double depth = 0.0;
  double truth = 0.0;
  Prediction prediction;
};

struct ProfileSeries {
  std::string method;
  std::vector<ProfilePoint> points;
};

/// Static chart: depth downward, value across; interval band, mean line and truth markers per method.
std::string profile_svg(const std::string& title, const std::string& value_label,
                        const std::vector<ProfileSeries>& series);

/// Writes metrics.csv, metrics.json and the runtime table into `dir`. Contract error on empty input
/// or two reports claiming the same group.
std::vector<std::filesystem::path> write_report(const std::filesystem::path& dir, const std::vector<MetricReport>& reports);

}  // namespace pfn
