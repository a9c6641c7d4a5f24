#include <map>
#include <ostream>
#include <sstream>

#include "common.hpp"
#include "pfn/baseline/hbm.hpp"
#include "pfn/context/scenarios.hpp"
#include "pfn/core/format.hpp"
#include "pfn/core/io.hpp"
#include "pfn/eval/metrics.hpp"

namespace pfn::app {

namespace {

constexpr const char* kPfnNote = "sum over (pattern, target) tasks of context build + forward pass; pre-training excluded";
constexpr const char* kHbmNote = "single-target fit on the BID and observed rows + inference";

struct ImputeRun {
  std::string pattern;
  BuiltTask task;
  std::vector<Prediction> predictions;
  PhaseTimes runtime;
};

struct HbmRun {
  Param target = Param::su;
  std::vector<std::size_t> rows;
  std::vector<Prediction> predictions;
  PhaseTimes runtime;
};

}  // namespace

int cmd_bench2(const Flags& flags, std::ostream& out) {
  nlohmann::json config = load_config(flags);
  const auto seed = resolve_seed(flags, config);
  Bench2Config data_cfg = config.contains("data") ? config.at("data").get<Bench2Config>() : default_bench2_config();
  data_cfg.seed = seed;
  require(!flags.view || *flags.view == "11", ErrorKind::config, "bench2 uses the 11-parameter view");
  require(!flags.scenario, ErrorKind::config, "bench2 runs the imputation scenario only");
  HbmSpec hbm = config.contains("hbm") ? config.at("hbm").get<HbmSpec>() : HbmSpec{};
  hbm.seed = seed;
  const bool baseline = config.value("baseline", true);
  const bool plots = config.value("plots", true);
  const Checkpoint ckpt = load_model(flags, config);
  const ContextOptions options{context_budget(config, ckpt), seed};

  config["seed"] = seed;
  config["data"] = data_cfg;
  config["hbm"] = hbm;
  config["baseline"] = baseline;
  config["plots"] = plots;
  config["context_budget"] = options.max_train;

  const Bench2Data data = make_bench2(data_cfg);
  require(!flags.bid || *flags.bid == data.bid.label, ErrorKind::config, "bench2 uses the BID " + data.bid.label);
  const CategoryEncoder encoder({&data.bid.table, &data.problem});

  // One task per (pattern, missing parameter), each timed on its own.
  const auto patterns = detect_patterns(data.problem);
  std::vector<ImputeRun> runs;
  std::map<std::size_t, std::string> pattern_of;
  for (const auto& p : patterns) {
    std::string key;  // comma-free for the CSV
    for (Param m : p.missing) key += (key.empty() ? "" : "+") + std::string(name_of(m));
    for (auto r : p.records) pattern_of[r] = key;
    for (Param target : p.missing) {
      ImputeRun run;
      run.pattern = p.label();
      run.task = timeit(run.runtime, "context_build", [&] {
                   return build_imputation(data.bid.table, data.problem, p, target, encoder, options);
                 }).first;
      runs.push_back(std::move(run));
    }
  }
  parallel_for(runs.size(), [&](std::size_t i) {
    runs[i].predictions = timeit(runs[i].runtime, "inference", [&] { return predict_task(ckpt, runs[i].task); }).first;
  });

  std::vector<HbmRun> fits;
  if (baseline) {
    for (Param target : kMechanical) {
      HbmRun f;
      f.target = target;
      for (std::size_t i = 0; i < data.problem.records.size(); ++i)
        if (!data.problem.records[i].has(target)) f.rows.push_back(i);
      if (!f.rows.empty()) fits.push_back(std::move(f));
    }
    parallel_for(fits.size(), [&](std::size_t i) {
      auto& f = fits[i];
      SiteTable train = data.bid.table;
      for (const auto& r : data.problem.records)
        if (r.has(f.target)) train.records.push_back(r);
      auto draws = timeit(f.runtime, "fit", [&] { return fit_hbm(hbm, train, f.target); }).first;
      std::vector<const BoreholeRecord*> rows;
      for (auto r : f.rows) rows.push_back(&data.problem.records[r]);
      f.predictions = timeit(f.runtime, "inference", [&] { return predict_hbm(draws, rows); }).first;
    });
  }

  std::vector<MetricReport> reports;
  std::ostringstream csv;
  csv << "method,pattern,target,site_id,borehole_id,depth," << kPredictionColumns << "\n";
  std::map<Param, std::vector<ProfileSeries>> charts;
  auto emit = [&](const std::string& method, Param target, const std::vector<std::size_t>& rows,
                  const std::vector<Prediction>& preds, std::vector<Prediction>& all_p, std::vector<double>& all_t) {
    auto& series = charts[target];
    if (series.empty() || series.back().method != method) series.push_back(ProfileSeries{method, {}});
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const auto& r = data.problem.records[rows[k]];
      const double truth = *data.truth.records[rows[k]][target];
      csv << method << ',' << pattern_of.at(rows[k]) << ',' << name_of(target) << ',' << r.site_id << ','
          << r.borehole_id << ',' << fmt_real(r.depth) << ',' << prediction_fields(preds[k], truth) << '\n';
      series.back().points.push_back(ProfilePoint{r.depth, truth, preds[k]});
      all_p.push_back(preds[k]);
      all_t.push_back(truth);
    }
  };

  nlohmann::json task_list = nlohmann::json::array();
  double task_seconds = 0.0;
  for (Param target : kMechanical) {
    MetricReport rep{"bench2", "PFN", "imputation", data.bid.label, name_of(target), {}, {}, 0, kPfnNote,
                     "manifest.json"};
    rep.runtime["context_build"] = 0.0;
    rep.runtime["inference"] = 0.0;
    std::vector<Prediction> p;
    std::vector<double> t;
    for (const auto& run : runs) {
      if (run.task.info.target != target) continue;
      emit("PFN", target, run.task.test_records, run.predictions, p, t);
      for (const auto& [phase, sec] : run.runtime) rep.runtime[phase] += sec;
      ++rep.tasks;
    }
    if (p.empty()) continue;
    rep.groups = {group_metric(name_of(target), p, t)};
    reports.push_back(std::move(rep));
  }
  for (const auto& run : runs) {
    auto info = nlohmann::json(run.task.info);
    double s = 0.0;
    for (const auto& [phase, sec] : run.runtime) s += sec;
    info["seconds"] = s;
    task_seconds += s;
    task_list.push_back(info);
  }
  for (const auto& f : fits) {
    MetricReport rep{"bench2", "HBM", "single-target", data.bid.label, name_of(f.target), {}, f.runtime, 1, kHbmNote,
                     "manifest.json"};
    std::vector<Prediction> p;
    std::vector<double> t;
    emit("HBM", f.target, f.rows, f.predictions, p, t);
    rep.groups = {group_metric(name_of(f.target), p, t)};
    reports.push_back(std::move(rep));
  }

  const auto dir = output_dir(flags, config);
  auto outputs = write_report(dir, reports);
  write_file_atomic(dir / "predictions.csv", csv.str());
  outputs.push_back(dir / "predictions.csv");
  if (plots) {
    for (const auto& [target, series] : charts) {
      const auto path = dir / "plots" / (file_stem(data.bid.label) + "_" + name_of(target) + ".svg");
      write_file_atomic(path, profile_svg(data.bid.label + " " + name_of(target), name_of(target), series));
      outputs.push_back(path);
    }
  }

  double pfn_total = 0.0;
  for (const auto& r : reports)
    if (r.method == "PFN") pfn_total += r.total_seconds();
  out << "patterns: " << patterns.size() << ", predict invocations: " << runs.size() << "\n";
  for (const auto& r : reports) {
    out << r.method << ' ' << r.target << ": n " << r.total_n() << ", RMSE " << fmt_real(r.pooled_rmse())
        << ", coverage " << fmt_real(r.pooled_coverage()) << "\n";
  }
  out << render_table2(reports);
  nlohmann::json pattern_list = nlohmann::json::array();
  for (const auto& p : patterns) pattern_list.push_back({{"pattern", p.label()}, {"records", p.records.size()}});
  write_manifest(dir, "bench2", config, outputs,
                 {{"patterns", pattern_list},
                  {"tasks", task_list},
                  {"task_seconds_sum", task_seconds},
                  {"pfn_total_seconds", pfn_total}});
  return ok;
}

}  // namespace pfn::app
