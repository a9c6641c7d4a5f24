#include <algorithm>
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

constexpr Param kTarget = Param::su;
constexpr const char* kPfnNote = "context build + forward pass; pre-training excluded";
constexpr const char* kHbmNote = "fit on the BID + inference";

struct PfnRun {
  std::size_t bid = 0;
  BuiltTask task;
  std::vector<Prediction> predictions;
  double inference_s = 0.0;
};

struct HbmRun {
  std::size_t bid = 0;
  SiteTable train;
  std::vector<std::size_t> rows;  // site record indices
  std::vector<Prediction> predictions;
  PhaseTimes runtime;
};

std::vector<Scenario> selected_scenarios(const Flags& flags, const nlohmann::json& config) {
  std::vector<std::string> names;
  if (flags.scenario) names = {*flags.scenario};
  else names = config.value("scenarios", std::vector<std::string>{"individual", "simultaneous"});
  std::vector<Scenario> out;
  for (const auto& n : names) {
    const auto s = scenario_from_string(n);
    require(s != Scenario::imputation, ErrorKind::config, "bench1 runs the individual and simultaneous scenarios");
    out.push_back(s);
  }
  require(!out.empty(), ErrorKind::config, "no scenario selected");
  return out;
}

std::vector<Bid> selected_bids(const Flags& flags, const nlohmann::json& config, std::vector<Bid> all, View view,
                               std::vector<std::string>& labels) {
  std::vector<std::string> wanted;
  if (flags.bid) wanted = {*flags.bid};
  else if (config.contains("bids")) wanted = config.at("bids").get<std::vector<std::string>>();
  if (wanted.empty()) {
    for (const auto& b : all) labels.push_back(b.label);
    return all;
  }
  std::vector<Bid> out;
  for (const auto& w : wanted) {
    bool found = false;
    for (const auto& b : all) {
      if (w == b.label || w == b.label + view_suffix(view)) {
        out.push_back(b);
        labels.push_back(b.label);
        found = true;
      }
    }
    require(found, ErrorKind::config, "unknown BID '" + w + "'");
  }
  return out;
}

// Site record indices of the target boreholes, split into observed and hidden rows.
void site_rows(const SiteTable& site, const std::vector<std::string>& holes, std::vector<BoreholeRecord>& observed,
               std::vector<std::size_t>& hidden) {
  for (std::size_t i = 0; i < site.records.size(); ++i) {
    const auto& r = site.records[i];
    if (std::find(holes.begin(), holes.end(), r.borehole_id) == holes.end()) continue;
    if (r.has(kTarget)) observed.push_back(r);
    else hidden.push_back(i);
  }
}

HbmRun hbm_setup(std::size_t bid_index, const SiteTable& bid_table, const SiteTable& site,
                 const std::vector<std::string>& holes) {
  HbmRun run;
  run.bid = bid_index;
  run.train = bid_table;
  site_rows(site, holes, run.train.records, run.rows);
  return run;
}

// Per-borehole metrics over (record index, prediction) pairs.
std::vector<GroupMetric> borehole_groups(const std::vector<std::string>& holes, const SiteTable& site,
                                         const SiteTable& truth, const std::vector<std::size_t>& rows,
                                         const std::vector<Prediction>& preds) {
  std::vector<GroupMetric> out;
  for (const auto& h : holes) {
    std::vector<Prediction> p;
    std::vector<double> t;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      if (site.records[rows[k]].borehole_id != h) continue;
      p.push_back(preds[k]);
      t.push_back(*truth.records[rows[k]][kTarget]);
    }
    if (!p.empty()) out.push_back(group_metric(h, p, t));
  }
  return out;
}

}  // namespace

int cmd_bench1(const Flags& flags, std::ostream& out) {
  nlohmann::json config = load_config(flags);
  const auto seed = resolve_seed(flags, config);
  Bench1Config data_cfg = config.contains("data") ? config.at("data").get<Bench1Config>() : default_bench1_config();
  data_cfg.seed = seed;
  const View view = view_from_int(flags.view ? std::stoi(*flags.view) : config.value("view", 4));
  const auto scenarios = selected_scenarios(flags, config);
  HbmSpec hbm = config.contains("hbm") ? config.at("hbm").get<HbmSpec>() : HbmSpec{};
  hbm.seed = seed;
  const bool baseline = config.value("baseline", true);
  const bool plots = config.value("plots", true);
  const Checkpoint ckpt = load_model(flags, config);
  const ContextOptions options{context_budget(config, ckpt), seed};

  const Bench1Data data = make_bench1(data_cfg);
  std::vector<std::string> bid_labels;
  const auto bids = selected_bids(flags, config, data.bids, view, bid_labels);

  config["seed"] = seed;
  config["data"] = data_cfg;
  config["view"] = static_cast<int>(view);
  nlohmann::json scenario_names = nlohmann::json::array();
  for (auto s : scenarios) scenario_names.push_back(to_string(s));
  config["scenarios"] = scenario_names;
  config["bids"] = bid_labels;
  config["hbm"] = hbm;
  config["baseline"] = baseline;
  config["plots"] = plots;
  config["context_budget"] = options.max_train;

  std::vector<const SiteTable*> tables{&data.site};
  for (const auto& b : data.bids) tables.push_back(&b.table);
  const CategoryEncoder encoder(tables);

  // Context build, timed per BID and scenario.
  std::vector<PfnRun> runs;
  std::map<std::pair<std::size_t, Scenario>, double> build_s;
  for (std::size_t b = 0; b < bids.size(); ++b) {
    for (auto s : scenarios) {
      PhaseTimes t;
      auto [built, _] = timeit(t, "context_build", [&] {
        return s == Scenario::individual
                   ? individual_scenario({bids[b]}, data.site, data.boreholes, view, kTarget, encoder, options)
                   : simultaneous_scenario({bids[b]}, data.site, data.boreholes, view, kTarget, encoder, options);
      });
      if (built.empty()) continue;
      build_s[{b, s}] = t["context_build"];
      for (auto& task : built) runs.push_back(PfnRun{b, std::move(task), {}, 0.0});
    }
  }
  parallel_for(runs.size(), [&](std::size_t i) {
    PhaseTimes t;
    auto [preds, s] = timeit(t, "inference", [&] { return predict_task(ckpt, runs[i].task); });
    runs[i].predictions = std::move(preds);
    runs[i].inference_s = s;
  });

  std::vector<HbmRun> fits;
  if (baseline) {
    for (std::size_t b = 0; b < bids.size(); ++b) {
      if (bids[b].cluster()) {
        for (const auto& h : data.boreholes) fits.push_back(hbm_setup(b, bids[b].for_borehole(h), data.site, {h}));
      } else {
        fits.push_back(hbm_setup(b, bids[b].table, data.site, data.boreholes));
      }
    }
    parallel_for(fits.size(), [&](std::size_t i) {
      auto& f = fits[i];
      auto [draws, _] = timeit(f.runtime, "fit", [&] { return fit_hbm(hbm, f.train, kTarget); });
      std::vector<const BoreholeRecord*> rows;
      for (auto r : f.rows) rows.push_back(&data.site.records[r]);
      f.predictions = timeit(f.runtime, "inference", [&] { return predict_hbm(draws, rows); }).first;
    });
  }

  // Reports, predictions and plots.
  std::vector<MetricReport> reports;
  std::ostringstream csv;
  csv << "method,scenario,bid,site_id,borehole_id,depth," << kPredictionColumns << "\n";
  std::map<std::pair<std::string, std::string>, std::vector<ProfileSeries>> charts;  // (bid, hole) -> series
  auto emit = [&](const std::string& method, const std::string& scenario, const std::string& bid,
                  const std::vector<std::size_t>& rows, const std::vector<Prediction>& preds) {
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const auto& r = data.site.records[rows[k]];
      const double truth = *data.truth.records[rows[k]][kTarget];
      csv << method << ',' << scenario << ',' << bid << ',' << r.site_id << ',' << r.borehole_id << ','
          << fmt_real(r.depth) << ',' << prediction_fields(preds[k], truth) << '\n';
      auto& series = charts[{bid, r.borehole_id}];
      const std::string name = method == "PFN" ? "PFN " + scenario : method;
      if (series.empty() || series.back().method != name) series.push_back(ProfileSeries{name, {}});
      series.back().points.push_back(ProfilePoint{r.depth, truth, preds[k]});
    }
  };

  nlohmann::json task_list = nlohmann::json::array();
  for (std::size_t b = 0; b < bids.size(); ++b) {
    const std::string label = bids[b].label + view_suffix(view);
    for (auto s : scenarios) {
      if (!build_s.count({b, s})) continue;
      MetricReport rep{"bench1", "PFN", to_string(s), label, name_of(kTarget), {}, {}, 0, kPfnNote, "manifest.json"};
      std::vector<std::size_t> rows;
      std::vector<Prediction> preds;
      rep.runtime["context_build"] = build_s[{b, s}];
      rep.runtime["inference"] = 0.0;
      for (const auto& run : runs) {
        if (run.bid != b || run.task.info.scenario != s) continue;
        rows.insert(rows.end(), run.task.test_records.begin(), run.task.test_records.end());
        preds.insert(preds.end(), run.predictions.begin(), run.predictions.end());
        rep.runtime["inference"] += run.inference_s;
        ++rep.tasks;
        auto info = nlohmann::json(run.task.info);
        info["inference_seconds"] = run.inference_s;
        task_list.push_back(info);
      }
      rep.groups = borehole_groups(data.boreholes, data.site, data.truth, rows, preds);
      emit("PFN", to_string(s), label, rows, preds);
      reports.push_back(std::move(rep));
    }
    if (!baseline) continue;
    MetricReport rep{"bench1", "HBM", "joint", label, name_of(kTarget), {}, {}, 0, kHbmNote, "manifest.json"};
    std::vector<std::size_t> rows;
    std::vector<Prediction> preds;
    for (const auto& f : fits) {
      if (f.bid != b) continue;
      rows.insert(rows.end(), f.rows.begin(), f.rows.end());
      preds.insert(preds.end(), f.predictions.begin(), f.predictions.end());
      for (const auto& [phase, sec] : f.runtime) rep.runtime[phase] += sec;
      ++rep.tasks;
    }
    rep.groups = borehole_groups(data.boreholes, data.site, data.truth, rows, preds);
    emit("HBM", "joint", label, rows, preds);
    reports.push_back(std::move(rep));
  }

  const auto dir = output_dir(flags, config);
  auto outputs = write_report(dir, reports);
  write_file_atomic(dir / "predictions.csv", csv.str());
  outputs.push_back(dir / "predictions.csv");
  if (plots) {
    for (const auto& [key, series] : charts) {
      const auto path = dir / "plots" / (file_stem(key.first) + "_" + file_stem(key.second) + ".svg");
      write_file_atomic(path, profile_svg(key.first + " " + key.second, "s_u (kPa)", series));
      outputs.push_back(path);
    }
  }

  out << "tasks: " << task_list.size() << "\n";
  for (const auto& r : reports) {
    out << r.method << ' ' << r.scenario << ' ' << r.bid << ": RMSE " << fmt_real(r.pooled_rmse()) << ", coverage "
        << fmt_real(r.pooled_coverage()) << "\n";
  }
  out << render_table1(reports);
  write_manifest(dir, "bench1", config, outputs, {{"tasks", task_list}});
  return ok;
}

}  // namespace pfn::app
