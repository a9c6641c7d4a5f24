#pragma once

#include <filesystem>
#include <iosfwd>

#include "pfn/model/config.hpp"
#include "pfn/model/params.hpp"
#include "pfn/prior/prior.hpp"

namespace pfn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Everything needed to run inference: architecture, the prior it was trained
/// on, the bar layout, target scaling, training bookkeeping and the weights.
struct Checkpoint {
  ModelConfig model;
  PriorConfig prior;
  BarLayout bars;
  TargetScaling scaling;
  nlohmann::json training = nlohmann::json::object();
  ParamStore<float> weights;
};

/// Binary layout (little endian):
///   "PFN1" | u32 version | u64 metadata bytes | metadata JSON
///   | u32 tensor count | per tensor: u32 name bytes, name, u32 rank, rank x u64 extents
///   | float32 data of every tensor in index order.
void write_checkpoint(std::ostream& os, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& is);

/// Writes through a temporary file in the same directory, then renames.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace pfn
