#include "pfn/train/trainer.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>

#include "pfn/model/network.hpp"
#include "pfn/train/loss.hpp"
#include "pfn/train/optim.hpp"

namespace pfn {

namespace {

constexpr std::uint64_t kValDomain = 0x76616C6964617465ULL;
constexpr std::uint64_t kBinDomain = 0x62696E6564676573ULL;

Task draw(const PriorConfig& prior, std::uint64_t seed, std::uint64_t index) {
  auto rng = stream_rng(seed, index);
  return sample_task(prior, rng);
}

}  // namespace

void TrainConfig::validate() const {
  require(steps >= 1, ErrorKind::config, "steps must be >= 1");
  require(tasks_per_step >= 1, ErrorKind::config, "tasks_per_step must be >= 1");
  require(peak_lr >= 0.0, ErrorKind::config, "peak_lr must be non-negative");
  require(warmup_steps >= 0, ErrorKind::config, "warmup_steps must be >= 0");
  require(clip_norm > 0.0, ErrorKind::config, "clip_norm must be positive");
  require(val_tasks >= 1 && val_every >= 1, ErrorKind::config, "validation settings must be positive");
  require(bin_fit_tasks >= 1, ErrorKind::config, "bin_fit_tasks must be >= 1");
  require(checkpoint_every >= 0, ErrorKind::config, "checkpoint_every must be >= 0");
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"steps", c.steps},
                     {"tasks_per_step", c.tasks_per_step},
                     {"peak_lr", c.peak_lr},
                     {"warmup_steps", c.warmup_steps},
                     {"lr_floor_ratio", c.lr_floor_ratio},
                     {"clip_norm", c.clip_norm},
                     {"seed", c.seed},
                     {"checkpoint_every", c.checkpoint_every},
                     {"val_tasks", c.val_tasks},
                     {"val_every", c.val_every},
                     {"bin_fit_tasks", c.bin_fit_tasks},
                     {"init_seed", c.init_seed}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  c = TrainConfig{};
  c.steps = j.value("steps", c.steps);
  c.tasks_per_step = j.value("tasks_per_step", c.tasks_per_step);
  c.peak_lr = j.value("peak_lr", c.peak_lr);
  c.warmup_steps = j.value("warmup_steps", c.warmup_steps);
  c.lr_floor_ratio = j.value("lr_floor_ratio", c.lr_floor_ratio);
  c.clip_norm = j.value("clip_norm", c.clip_norm);
  c.seed = j.value("seed", c.seed);
  c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
  c.val_tasks = j.value("val_tasks", c.val_tasks);
  c.val_every = j.value("val_every", c.val_every);
  c.bin_fit_tasks = j.value("bin_fit_tasks", c.bin_fit_tasks);
  c.init_seed = j.value("init_seed", c.init_seed);
  c.validate();
}

void to_json(nlohmann::json& j, const TrainLogRecord& r) {
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  j = nlohmann::json{{"step", r.step}, {"train_nll", num(r.train_nll)}, {"val_nll", num(r.val_nll)},
                     {"wallclock_s", r.wallclock_s}};
}

TargetScaling default_target_scaling(const PriorConfig& prior) {
  if (prior.family == PriorFamily::conjugate) {
    const auto& c = prior.conjugate;
    return {TargetScaling::Mode::fixed, c.mu0, std::sqrt(c.tau0_sq + c.sigma_sq)};
  }
  return {TargetScaling::Mode::per_task, 0.0, 1.0};
}

BarLayout fit_bar_layout(const PriorConfig& prior, const TargetScaling& scaling, int n_bins, int n_tasks,
                         std::uint64_t seed) {
  std::vector<double> pooled;
  for (int i = 0; i < n_tasks; ++i) {
    const Task t = draw(prior, seed ^ kBinDomain, static_cast<std::uint64_t>(i));
    const auto s = resolve_target_scaling(scaling, t.y_train);
    for (Index r = 0; r < t.n_train(); ++r) pooled.push_back((t.y_train[r] - s.shift) / s.scale);
    if (t.y_test) {
      for (Index r = 0; r < t.y_test->size(); ++r) pooled.push_back(((*t.y_test)[r] - s.shift) / s.scale);
    }
  }
  return equal_mass_layout(std::move(pooled), n_bins);
}

Eigen::VectorXd standardized_test_targets(const Task& task, const TargetScaling& resolved) {
  require(task.y_test.has_value(), ErrorKind::contract, "task has no test targets");
  return (task.y_test->array() - resolved.shift) / resolved.scale;
}

double task_nll(const Checkpoint& ckpt, const ParamStore<float>& weights, const Task& task) {
  GradTape<float> tape;
  tape.set_recording(false);
  const auto p = bind_parameters(tape, weights, false);
  const CellGrid grid = encode_task(task, ckpt.scaling);
  const auto loss = bar_nll(forward(ckpt.model, p, grid), standardized_test_targets(task, grid.scaling), ckpt.bars);
  return static_cast<double>(loss.value().item()) + std::log(grid.scaling.scale);
}

double mean_nll(const Checkpoint& ckpt, const std::vector<Task>& tasks) {
  require(!tasks.empty(), ErrorKind::contract, "mean_nll needs at least one task");
  double total = 0.0;
  for (const auto& t : tasks) total += task_nll(ckpt, ckpt.weights, t);
  return total / static_cast<double>(tasks.size());
}

std::vector<Task> validation_tasks(const PriorConfig& prior, const TrainConfig& cfg) {
  std::vector<Task> out;
  for (int i = 0; i < cfg.val_tasks; ++i) out.push_back(draw(prior, cfg.seed ^ kValDomain, static_cast<std::uint64_t>(i)));
  return out;
}

TrainResult train(const PriorConfig& prior, const ModelConfig& model, const TrainConfig& cfg,
                  const TrainOptions& options) {
  prior.validate();
  model.validate();
  cfg.validate();
  require(prior.max_features() <= model.max_features, ErrorKind::config,
          "prior produces more features than the model supports");
  require(prior.max_rows() <= model.max_rows, ErrorKind::config, "prior produces more rows than the model supports");

  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };

  TrainResult result;
  Checkpoint& ckpt = result.checkpoint;
  ckpt.model = model;
  ckpt.prior = prior;
  ckpt.scaling = default_target_scaling(prior);
  ckpt.bars = fit_bar_layout(prior, ckpt.scaling, model.n_bins, cfg.bin_fit_tasks, cfg.seed);
  ckpt.weights = init_parameters<float>(model, cfg.init_seed);
  const long budget = static_cast<long>(cfg.steps) * cfg.tasks_per_step;
  ckpt.training = {{"train_config", cfg}, {"task_budget", budget}, {"tasks_seen", 0}, {"steps_done", 0}};

  if (options.log) {
    const nlohmann::json header{{"header", true},
                                {"task_budget", budget},
                                {"steps", cfg.steps},
                                {"tasks_per_step", cfg.tasks_per_step},
                                {"prior_family", prior.family == PriorFamily::conjugate ? "conjugate" : "scm"},
                                {"parameters", ckpt.weights.scalar_count()},
                                {"seed", cfg.seed}};
    *options.log << header.dump() << '\n' << std::flush;
  }
  const std::vector<Task> val = validation_tasks(prior, cfg);
  auto emit = [&](int step, double train_nll) {
    TrainLogRecord rec{step, train_nll, mean_nll(ckpt, val), elapsed()};
    result.log.push_back(rec);
    if (options.log) *options.log << nlohmann::json(rec).dump() << '\n' << std::flush;
    if (options.on_record) options.on_record(rec);
  };
  emit(0, std::numeric_limits<double>::quiet_NaN());

  const LrSchedule schedule{cfg.peak_lr, cfg.warmup_steps, cfg.steps, cfg.lr_floor_ratio};
  Adam<float> adam(ckpt.weights);
  ParamStore<float> grads = ckpt.weights;
  double nll_sum = 0.0;
  long nll_count = 0;

  for (int step = 0; step < cfg.steps; ++step) {
    for (std::size_t i = 0; i < grads.size(); ++i) grads[i].data().setZero();
    for (int k = 0; k < cfg.tasks_per_step; ++k) {
      const auto index = static_cast<std::uint64_t>(step) * static_cast<std::uint64_t>(cfg.tasks_per_step) +
                         static_cast<std::uint64_t>(k);
      const Task task = draw(prior, cfg.seed, index);
      GradTape<float> tape;
      const auto p = bind_parameters(tape, ckpt.weights, true);
      const CellGrid grid = encode_task(task, ckpt.scaling);
      const auto loss = bar_nll(forward(model, p, grid, index + 1), standardized_test_targets(task, grid.scaling),
                                ckpt.bars);
      const double value = loss.value().item();
      if (!std::isfinite(value)) {
        fail(ErrorKind::numeric, "non-finite loss at step " + std::to_string(step) + " (task seed " +
                                     std::to_string(cfg.seed) + ", stream " + std::to_string(index) + ")");
      }
      tape.backward(loss);
      for (std::size_t i = 0; i < grads.size(); ++i) grads[i].data() += p.vars[i].grad().data();
      nll_sum += value + std::log(grid.scaling.scale);
      ++nll_count;
    }
    for (std::size_t i = 0; i < grads.size(); ++i) grads[i].data() /= static_cast<float>(cfg.tasks_per_step);
    clip_global_norm(grads, cfg.clip_norm);
    adam.step(ckpt.weights, grads, schedule.at(step));

    const int done = step + 1;
    ckpt.training["tasks_seen"] = static_cast<long>(done) * cfg.tasks_per_step;
    ckpt.training["steps_done"] = done;
    if (done % cfg.val_every == 0 || done == cfg.steps) {
      emit(done, nll_sum / static_cast<double>(nll_count));
      nll_sum = 0.0;
      nll_count = 0;
    }
    if (!options.checkpoint_path.empty() && cfg.checkpoint_every > 0 && done % cfg.checkpoint_every == 0 &&
        done != cfg.steps) {
      save_checkpoint(options.checkpoint_path, ckpt);
    }
  }
  if (!options.checkpoint_path.empty()) save_checkpoint(options.checkpoint_path, ckpt);
  return result;
}

}  // namespace pfn
