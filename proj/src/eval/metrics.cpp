#include "pfn/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>
#include <tuple>

#include "pfn/core/error.hpp"
#include "pfn/core/format.hpp"
#include "pfn/core/io.hpp"

namespace pfn {

double rmse(const std::vector<double>& means, const std::vector<double>& truths) {
  require(means.size() == truths.size(), ErrorKind::contract, "rmse: length mismatch");
  require(!means.empty(), ErrorKind::contract, "rmse: empty input");
  double ss = 0.0;
  for (std::size_t i = 0; i < means.size(); ++i) ss += (means[i] - truths[i]) * (means[i] - truths[i]);
  return std::sqrt(ss / static_cast<double>(means.size()));
}

bool covers(const Prediction& p, double truth) { return p.q025 <= truth && truth <= p.q975; }

double coverage95(const std::vector<Prediction>& predictions, const std::vector<double>& truths) {
  require(predictions.size() == truths.size(), ErrorKind::contract, "coverage95: length mismatch");
  require(!predictions.empty(), ErrorKind::contract, "coverage95: empty input");
  std::size_t inside = 0;
  for (std::size_t i = 0; i < truths.size(); ++i) inside += covers(predictions[i], truths[i]) ? 1 : 0;
  return static_cast<double>(inside) / static_cast<double>(truths.size());
}

GroupMetric group_metric(const std::string& group, const std::vector<Prediction>& predictions,
                         const std::vector<double>& truths) {
  std::vector<double> means;
  for (const auto& p : predictions) means.push_back(p.mean);
  return GroupMetric{group, static_cast<Index>(truths.size()), rmse(means, truths), coverage95(predictions, truths)};
}

void MetricReport::validate() const {
  require(!groups.empty(), ErrorKind::contract, "metric report has no groups");
  std::set<std::string> names;
  for (const auto& g : groups) {
    require(g.n >= 1, ErrorKind::contract, "group '" + g.group + "' has no rows");
    require(g.coverage >= 0.0 && g.coverage <= 1.0, ErrorKind::contract, "group '" + g.group + "' coverage out of range");
    require(g.rmse >= 0.0, ErrorKind::contract, "group '" + g.group + "' has negative RMSE");
    require(names.insert(g.group).second, ErrorKind::contract, "duplicate group '" + g.group + "'");
  }
  require(tasks >= 1, ErrorKind::contract, "metric report must cover at least one task");
}

Index MetricReport::total_n() const {
  Index n = 0;
  for (const auto& g : groups) n += g.n;
  return n;
}

double MetricReport::pooled_rmse() const {
  double ss = 0.0;
  for (const auto& g : groups) ss += static_cast<double>(g.n) * g.rmse * g.rmse;
  return std::sqrt(ss / static_cast<double>(total_n()));
}

double MetricReport::pooled_coverage() const {
  double inside = 0.0;
  for (const auto& g : groups) inside += static_cast<double>(g.n) * g.coverage;
  return inside / static_cast<double>(total_n());
}

double MetricReport::total_seconds() const {
  double s = 0.0;
  for (const auto& [_, v] : runtime) s += v;
  return s;
}

void to_json(nlohmann::json& j, const MetricReport& r) {
  nlohmann::json groups = nlohmann::json::array();
  for (const auto& g : r.groups)
    groups.push_back({{"group", g.group}, {"n", g.n}, {"rmse", g.rmse}, {"coverage95", g.coverage}});
  j = nlohmann::json{{"benchmark", r.benchmark},
                     {"method", r.method},
                     {"scenario", r.scenario},
                     {"bid", r.bid},
                     {"target", r.target},
                     {"groups", groups},
                     {"pooled", {{"n", r.total_n()}, {"rmse", r.pooled_rmse()}, {"coverage95", r.pooled_coverage()}}},
                     {"runtime_seconds", r.runtime},
                     {"tasks", r.tasks},
                     {"runtime_note", r.runtime_note},
                     {"manifest", r.manifest}};
}

void from_json(const nlohmann::json& j, MetricReport& r) {
  r = MetricReport{};
  r.benchmark = j.at("benchmark").get<std::string>();
  r.method = j.at("method").get<std::string>();
  r.scenario = j.value("scenario", "");
  r.bid = j.value("bid", "");
  r.target = j.value("target", "");
  for (const auto& g : j.at("groups"))
    r.groups.push_back(
        {g.at("group").get<std::string>(), g.at("n").get<Index>(), g.at("rmse").get<double>(), g.at("coverage95").get<double>()});
  r.runtime = j.value("runtime_seconds", PhaseTimes{});
  r.tasks = j.value("tasks", Index{1});
  r.runtime_note = j.value("runtime_note", "");
  r.manifest = j.value("manifest", "");
  r.validate();
}

std::string metrics_csv(const std::vector<MetricReport>& reports) {
  std::ostringstream os;
  os << kMetricsCsvHeader << '\n';
  for (const auto& r : reports)
    for (const auto& g : r.groups)
      os << r.benchmark << ',' << r.method << ',' << r.scenario << ',' << r.bid << ',' << r.target << ',' << g.group
         << ',' << g.n << ',' << fmt_real(g.rmse) << ',' << fmt_real(g.coverage) << '\n';
  return os.str();
}

std::string format_seconds(double s) {
  char buf[32];
  if (std::abs(s) >= 100.0) std::snprintf(buf, sizeof buf, "%.0f", s);
  else std::snprintf(buf, sizeof buf, "%.3g", s);
  return buf;
}

std::string render_table1_row(const Table1Row& row) {
  auto cell = [](const std::optional<double>& v) { return v ? format_seconds(*v) : std::string("N/A"); };
  return row.bid + " | HBM " + cell(row.hbm) + " | individual " + cell(row.individual) + " | simultaneous " +
         cell(row.simultaneous);
}

std::vector<Table1Row> table1_rows(const std::vector<MetricReport>& reports) {
  std::vector<Table1Row> rows;
  auto row_for = [&](const std::string& bid) -> Table1Row& {
    for (auto& r : rows)
      if (r.bid == bid) return r;
    rows.push_back(Table1Row{bid, {}, {}, {}});
    return rows.back();
  };
  for (const auto& r : reports) {
    if (r.benchmark != "bench1") continue;
    auto& row = row_for(r.bid);
    const double per_task = r.total_seconds() / static_cast<double>(r.tasks);
    if (r.method == "HBM") row.hbm = per_task;
    else if (r.scenario == "individual") row.individual = per_task;
    else if (r.scenario == "simultaneous") row.simultaneous = r.total_seconds();
  }
  return rows;
}

std::string render_table1(const std::vector<MetricReport>& reports) {
  std::ostringstream os;
  os << "Runtime (seconds), prediction benchmark\n";
  for (const auto& row : table1_rows(reports)) os << render_table1_row(row) << '\n';
  os << "HBM: fit on the BID plus inference (per borehole for cluster-style BIDs). "
        "individual: context build plus forward pass, averaged per borehole. "
        "simultaneous: one run over all boreholes. Pre-training is excluded.\n";
  return os.str();
}

std::string render_table2_row(double hbm_seconds, double pfn_total_seconds) {
  return "HBM " + format_seconds(hbm_seconds) + " / PFN-total " + format_seconds(pfn_total_seconds);
}

std::string render_table2(const std::vector<MetricReport>& reports) {
  double hbm = 0.0, pfn = 0.0;
  Index pfn_tasks = 0;
  bool any = false;
  for (const auto& r : reports) {
    if (r.benchmark != "bench2") continue;
    any = true;
    if (r.method == "HBM") {
      hbm += r.total_seconds();
    } else {
      pfn += r.total_seconds();
      pfn_tasks += r.tasks;
    }
  }
  if (!any) return "";
  std::ostringstream os;
  os << "Runtime (seconds), imputation benchmark\n" << render_table2_row(hbm, pfn) << '\n';
  os << "HBM: one single-target fit per parameter, summed. PFN-total: sum over " << pfn_tasks
     << " per-(pattern, target) tasks of context build plus forward pass. Pre-training is excluded.\n";
  return os.str();
}

namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

}  // namespace

std::string profile_svg(const std::string& title, const std::string& value_label,
                        const std::vector<ProfileSeries>& series) {
  constexpr double W = 480, H = 600, left = 60, right = 20, top = 40, bottom = 50;
  double vmin = INFINITY, vmax = -INFINITY, dmin = INFINITY, dmax = -INFINITY;
  for (const auto& s : series) {
    for (const auto& p : s.points) {
      for (double v : {p.truth, p.prediction.q025, p.prediction.q975, p.prediction.mean}) {
        if (!std::isfinite(v)) continue;
        vmin = std::min(vmin, v);
        vmax = std::max(vmax, v);
      }
      dmin = std::min(dmin, p.depth);
      dmax = std::max(dmax, p.depth);
    }
  }
  if (!std::isfinite(vmin)) vmin = 0.0, vmax = 1.0, dmin = 0.0, dmax = 1.0;
  if (vmax - vmin < 1e-12) vmin -= 0.5, vmax += 0.5;
  if (dmax - dmin < 1e-12) dmin -= 0.5, dmax += 0.5;
  dmin = std::min(dmin, 0.0);
  auto px = [&](double v) { return left + (v - vmin) / (vmax - vmin) * (W - left - right); };
  auto py = [&](double d) { return top + (d - dmin) / (dmax - dmin) * (H - top - bottom); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
     << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">" << xml_escape(title)
     << "</text>\n";
  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << W - left - right << "\" height=\""
     << H - top - bottom << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double v = vmin + (vmax - vmin) * k / 4.0;
    const double d = dmin + (dmax - dmin) * k / 4.0;
    os << "<text x=\"" << num(px(v)) << "\" y=\"" << H - bottom + 15 << "\" text-anchor=\"middle\">" << tick(v)
       << "</text>\n";
    os << "<text x=\"" << left - 5 << "\" y=\"" << num(py(d) + 4) << "\" text-anchor=\"end\">" << tick(d)
       << "</text>\n";
  }
  os << "<text x=\"" << (left + W - right) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">"
     << xml_escape(value_label) << "</text>\n";
  os << "<text x=\"15\" y=\"" << (top + H - bottom) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 15 "
     << (top + H - bottom) / 2 << ")\">depth (m)</text>\n";

  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
  for (std::size_t s = 0; s < series.size(); ++s) {
    auto pts = series[s].points;
    std::sort(pts.begin(), pts.end(), [](const ProfilePoint& a, const ProfilePoint& b) { return a.depth < b.depth; });
    const char* color = colors[s % 4];
    if (pts.empty()) continue;
    os << "<polygon fill=\"" << color << "\" fill-opacity=\"0.18\" stroke=\"none\" points=\"";
    for (const auto& p : pts) os << num(px(p.prediction.q025)) << ',' << num(py(p.depth)) << ' ';
    for (auto it = pts.rbegin(); it != pts.rend(); ++it) os << num(px(it->prediction.q975)) << ',' << num(py(it->depth)) << ' ';
    os << "\"/>\n<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& p : pts) os << num(px(p.prediction.mean)) << ',' << num(py(p.depth)) << ' ';
    os << "\"/>\n";
    os << "<text x=\"" << W - right - 5 << "\" y=\"" << top + 15 + 14 * static_cast<double>(s)
       << "\" text-anchor=\"end\" fill=\"" << color << "\">" << xml_escape(series[s].method) << " mean, 95% interval</text>\n";
  }
  if (!series.empty()) {
    for (const auto& p : series.front().points)
      os << "<circle cx=\"" << num(px(p.truth)) << "\" cy=\"" << num(py(p.depth)) << "\" r=\"2.5\" fill=\"black\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::vector<std::filesystem::path> write_report(const std::filesystem::path& dir, const std::vector<MetricReport>& reports) {
  require(!reports.empty(), ErrorKind::contract, "report needs at least one metric report");
  std::set<std::tuple<std::string, std::string, std::string, std::string, std::string, std::string>> keys;
  for (const auto& r : reports) {
    r.validate();
    for (const auto& g : r.groups)
      require(keys.insert({r.benchmark, r.method, r.scenario, r.bid, r.target, g.group}).second, ErrorKind::contract,
              "conflicting group key: " + r.benchmark + "/" + r.method + "/" + r.scenario + "/" + r.bid + "/" +
                  r.target + "/" + g.group);
  }
  std::vector<std::filesystem::path> out{dir / "metrics.csv", dir / "metrics.json", dir / "runtime.txt"};
  write_file_atomic(out[0], metrics_csv(reports));
  write_file_atomic(out[1], nlohmann::json(reports).dump(2) + "\n");
  std::string runtime;
  if (!table1_rows(reports).empty()) runtime += render_table1(reports);
  runtime += render_table2(reports);
  write_file_atomic(out[2], runtime);
  return out;
}

}  // namespace pfn
