#include <ostream>
#include <sstream>

#include "common.hpp"
#include "pfn/core/format.hpp"
#include "pfn/core/io.hpp"
#include "pfn/geodata/records.hpp"

namespace pfn::app {

int cmd_impute(const Flags& flags, std::ostream& out) {
  nlohmann::json config = load_config(flags);
  if (!flags.inputs.empty()) config["table"] = flags.inputs[0];
  if (flags.inputs.size() >= 2) config["bid_table"] = flags.inputs[1];
  require(flags.inputs.size() <= 2, ErrorKind::config, "impute takes a table and an optional BID table");
  require(config.contains("table"), ErrorKind::config, "impute needs an input table (positional or config \"table\")");
  const auto seed = resolve_seed(flags, config);
  const auto target_name = config.value("target", std::string("su"));
  const auto target_param = param_from_name(target_name);
  require(target_param.has_value(), ErrorKind::config, "unknown target parameter '" + target_name + "'");
  const Param target = *target_param;
  const View view = view_from_int(flags.view ? std::stoi(*flags.view) : config.value("view", 11));
  const Checkpoint ckpt = load_model(flags, config);
  const ContextOptions options{context_budget(config, ckpt), seed};
  config["seed"] = seed;
  config["target"] = name_of(target);
  config["view"] = static_cast<int>(view);
  config["context_budget"] = options.max_train;

  const SiteTable table = load_csv(config.at("table").get<std::string>());
  ContextSpec spec;
  if (config.contains("bid_table")) spec.bid = load_csv(config.at("bid_table").get<std::string>());
  else spec.bid.label = "none";
  spec.features = view_features(view, target, false);
  spec.target = target;
  spec.boreholes = table.borehole_ids();
  const CategoryEncoder encoder({&spec.bid, &table});

  const auto built = build_fill(spec, table, encoder, options);
  const auto preds = built.info.empty_test ? std::vector<Prediction>{} : predict_task(ckpt, built);

  std::ostringstream csv;
  csv << "row_id,site_id,borehole_id,depth,mean,q025,q500,q975\n";
  SiteTable filled = table;
  for (std::size_t k = 0; k < preds.size(); ++k) {
    const auto row = built.test_records[k];
    const auto& r = table.records[row];
    const auto& p = preds[k];
    csv << row << ',' << r.site_id << ',' << r.borehole_id << ',' << fmt_real(r.depth) << ',' << fmt_real(p.mean) << ','
        << fmt_real(p.q025) << ',' << fmt_real(p.q500) << ',' << fmt_real(p.q975) << '\n';
    filled.records[row][target] = p.mean;
  }
  std::ostringstream filled_csv;
  write_csv(filled_csv, filled);

  const auto dir = output_dir(flags, config);
  write_file_atomic(dir / "predictions.csv", csv.str());
  write_file_atomic(dir / "filled.csv", filled_csv.str());
  out << "imputed " << preds.size() << " of " << table.records.size() << " rows of " << name_of(target) << " from "
      << built.info.n_train << " context rows\n";
  write_manifest(dir, "impute", config, {dir / "predictions.csv", dir / "filled.csv"}, {{"task", built.info}});
  return ok;
}

}  // namespace pfn::app
