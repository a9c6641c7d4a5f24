#include <fstream>
#include <ostream>

#include "pfn/app/cli.hpp"
#include "pfn/core/io.hpp"
#include "pfn/train/trainer.hpp"

namespace pfn::app {

int cmd_pretrain(const Flags& flags, std::ostream& out) {
  nlohmann::json config = load_config(flags);
  require(flags.config.has_value(), ErrorKind::config, "pretrain needs --config");
  PriorConfig prior = config.value("prior", nlohmann::json::object()).get<PriorConfig>();
  ModelConfig model = config.value("model", nlohmann::json::object()).get<ModelConfig>();
  TrainConfig train_cfg = config.value("train", nlohmann::json::object()).get<TrainConfig>();
  if (flags.seed) train_cfg.seed = *flags.seed;

  const auto dir = output_dir(flags, config);
  std::filesystem::create_directories(dir);
  const std::filesystem::path ckpt_path =
      flags.checkpoint ? std::filesystem::path(*flags.checkpoint) : dir / "checkpoint.pfn";
  const auto log_path = dir / "train_log.ndjson";

  config["prior"] = prior;
  config["model"] = model;
  config["train"] = train_cfg;

  std::ofstream log(log_path, std::ios::trunc);
  require(static_cast<bool>(log), ErrorKind::io, "cannot open " + log_path.string());
  TrainOptions options;
  options.checkpoint_path = ckpt_path;
  options.log = &log;
  options.on_record = [&](const TrainLogRecord& r) {
    out << "step " << r.step << " val_nll " << r.val_nll << " (" << r.wallclock_s << " s)\n" << std::flush;
  };
  const auto result = train(prior, model, train_cfg, options);
  log.close();
  out << "final validation NLL " << result.log.back().val_nll << "\n";
  write_manifest(dir, "pretrain", config, {ckpt_path},
                 {{"final_val_nll", result.log.back().val_nll},
                  {"task_budget", result.checkpoint.training["task_budget"]}});
  return ok;
}

}  // namespace pfn::app
