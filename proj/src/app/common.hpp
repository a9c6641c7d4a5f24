#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pfn/app/cli.hpp"
#include "pfn/context/context.hpp"
#include "pfn/infer/predictive.hpp"
#include "pfn/model/checkpoint.hpp"

namespace pfn::app {

/// --seed, then config "seed", then `fallback`.
std::uint64_t resolve_seed(const Flags& flags, const nlohmann::json& config, std::uint64_t fallback = 1);

/// Loads --checkpoint (or config "checkpoint") and records its path and fingerprint in `config`.
Checkpoint load_model(const Flags& flags, nlohmann::json& config);

/// Training-row budget: config "context_budget", else the largest table the model was trained on.
Index context_budget(const nlohmann::json& config, const Checkpoint& ckpt);

/// Workers: hardware threads, capped by PFN_SITE_THREADS when set.
int worker_count();

/// Runs fn(0..n-1) on up to worker_count() threads; the first exception is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

/// predict() with failures re-raised under the task id.
std::vector<Prediction> predict_task(const Checkpoint& ckpt, const BuiltTask& task);

/// "truth,mean,q025,q500,q975,inside".
inline constexpr const char* kPredictionColumns = "truth,mean,q025,q500,q975,inside";
std::string prediction_fields(const Prediction& p, double truth);

/// Safe file stem for a label such as "Local-BID/4".
std::string file_stem(const std::string& label);

}  // namespace pfn::app
