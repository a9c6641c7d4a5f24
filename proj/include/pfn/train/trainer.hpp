#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <vector>

#include "pfn/model/checkpoint.hpp"

namespace pfn {

struct TrainConfig {
  int steps = 2000;
  int tasks_per_step = 16;
  double peak_lr = 1e-3;
  int warmup_steps = 100;
  double lr_floor_ratio = 0.05;
  double clip_norm = 1.0;
  std::uint64_t seed = 1;
  int checkpoint_every = 0;  // 0 disables intermediate checkpoints
  int val_tasks = 64;
  int val_every = 100;
  int bin_fit_tasks = 500;
  std::uint64_t init_seed = 7;

  void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

struct TrainLogRecord {
  int step = 0;
  double train_nll = 0.0;  // mean over tasks since the previous record; NaN before the first update
  double val_nll = 0.0;
  double wallclock_s = 0.0;
};

void to_json(nlohmann::json& j, const TrainLogRecord& r);

struct TrainOptions {
  /// Destination of the final (and intermediate) checkpoint; empty keeps it in memory only.
  std::filesystem::path checkpoint_path;
  /// Newline-delimited JSON log: one header record, then one record per validation point.
  std::ostream* log = nullptr;
  std::function<void(const TrainLogRecord&)> on_record;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<TrainLogRecord> log;
};

/// Conjugate tasks use fixed scaling from the prior's marginal; everything else scales per task.
TargetScaling default_target_scaling(const PriorConfig& prior);

/// Equal-mass bar layout fitted to standardized targets pooled from prior tasks.
BarLayout fit_bar_layout(const PriorConfig& prior, const TargetScaling& scaling, int n_bins, int n_tasks,
                         std::uint64_t seed);

/// Standardized test targets of a task (requires y_test).
Eigen::VectorXd standardized_test_targets(const Task& task, const TargetScaling& resolved);

/// Mean bar NLL per task in target units (standardized NLL plus log scale).
double task_nll(const Checkpoint& ckpt, const ParamStore<float>& weights, const Task& task);

/// Mean of task_nll over tasks.
double mean_nll(const Checkpoint& ckpt, const std::vector<Task>& tasks);

/// Fixed validation tasks of a run.
std::vector<Task> validation_tasks(const PriorConfig& prior, const TrainConfig& cfg);

/// Meta-trains a fresh model on tasks streamed from the prior.
TrainResult train(const PriorConfig& prior, const ModelConfig& model, const TrainConfig& cfg,
                  const TrainOptions& options = {});

}  // namespace pfn
