#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "pfn/infer/predictive.hpp"
#include "pfn/model/checkpoint.hpp"

namespace pfn {

/// Test rows never attend to one another, so they are run in chunks of this many.
inline constexpr Index kTestChunk = 256;

/// One Prediction per test row, in a single forward pass per chunk. Never reads y_test.
std::vector<Prediction> predict(const Checkpoint& ckpt, const Task& task);

/// CSV with header row_id,mean,q025,q500,q975.
void write_predictions_csv(std::ostream& os, const std::vector<Prediction>& preds);
/// JSON array of {row_id, mean, q025, q500, q975, distribution}.
nlohmann::json predictions_json(const std::vector<Prediction>& preds);

}  // namespace pfn
