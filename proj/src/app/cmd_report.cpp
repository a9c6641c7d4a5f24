#include <cmath>
#include <map>
#include <ostream>
#include <sstream>

#include "common.hpp"
#include "pfn/core/io.hpp"
#include "pfn/eval/metrics.hpp"

namespace pfn::app {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

double number(const std::string& s) { return s == "NA" ? std::nan("") : std::stod(s); }

using Charts = std::map<std::string, std::vector<ProfileSeries>>;

// Profile charts from a benchmark predictions file: per (BID, borehole) for the prediction
// benchmark, per parameter for the imputation benchmark.
void collect_charts(const std::filesystem::path& path, Charts& charts, std::map<std::string, std::string>& labels) {
  std::istringstream is(read_file(path));
  std::string line;
  std::getline(is, line);
  const auto header = split(line);
  require(header.size() == 12 && header[0] == "method", ErrorKind::data, path.string() + ": unrecognized header");
  const bool imputation = header[1] == "pattern";
  while (std::getline(is, line)) {
    const auto f = split(line);
    require(f.size() == 12, ErrorKind::data, path.string() + ": malformed row");
    const std::string key = imputation ? f[2] : f[2] + " " + f[4];
    const std::string method = imputation || f[0] != "PFN" ? f[0] : f[0] + " " + f[1];
    labels[key] = imputation ? f[2] : "s_u";
    auto& series = charts[key];
    if (series.empty() || series.back().method != method) series.push_back(ProfileSeries{method, {}});
    Prediction p;
    p.mean = number(f[7]);
    p.q025 = number(f[8]);
    p.q500 = number(f[9]);
    p.q975 = number(f[10]);
    series.back().points.push_back(ProfilePoint{number(f[5]), number(f[6]), p});
  }
}

}  // namespace

int cmd_report(const Flags& flags, std::ostream& out) {
  nlohmann::json config = load_config(flags);
  if (!flags.inputs.empty()) config["inputs"] = flags.inputs;
  require(config.contains("inputs") && !config.at("inputs").empty(), ErrorKind::config,
          "report needs result directories or metrics.json files");
  const bool plots = config.value("plots", true);
  config["plots"] = plots;

  std::vector<MetricReport> reports;
  Charts charts;
  std::map<std::string, std::string> labels;
  for (const auto& in : config.at("inputs").get<std::vector<std::string>>()) {
    std::filesystem::path p(in);
    const bool is_dir = std::filesystem::is_directory(p);
    const auto metrics = is_dir ? p / "metrics.json" : p;
    const auto j = read_json_file(metrics);
    const auto& list = j.is_object() && j.contains("reports") ? j.at("reports") : j;
    require(list.is_array(), ErrorKind::data, metrics.string() + " holds no metric reports");
    for (const auto& r : list) reports.push_back(r.get<MetricReport>());
    const auto preds = (is_dir ? p : p.parent_path()) / "predictions.csv";
    if (plots && std::filesystem::exists(preds)) collect_charts(preds, charts, labels);
  }

  const auto dir = output_dir(flags, config);
  auto outputs = write_report(dir, reports);
  for (const auto& [key, series] : charts) {
    const auto path = dir / "plots" / (file_stem(key) + ".svg");
    write_file_atomic(path, profile_svg(key, labels.at(key), series));
    outputs.push_back(path);
  }
  out << read_file(dir / "runtime.txt");
  write_manifest(dir, "report", config, outputs, {{"reports", reports.size()}});
  return ok;
}

}  // namespace pfn::app
