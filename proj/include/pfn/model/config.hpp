#pragma once

#include <json.hpp>
#include <vector>

#include "pfn/core/error.hpp"

namespace pfn {

struct ModelConfig {
  int embed_dim = 64;
  int n_layers = 4;
  int n_heads = 4;
  int mlp_hidden = 128;
  int n_bins = 64;
  double dropout_rate = 0.0;
  int max_features = 16;
  int max_rows = 1024;

  void validate() const;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

/// Bin edges in standardized target units. With `tails` set the two outer bins
/// become half-Normal tails whose scales are the outer bin widths.
struct BarLayout {
  std::vector<double> edges;
  bool tails = true;

  int n_bins() const { return static_cast<int>(edges.size()) - 1; }
  double tail_left() const { return tails ? edges[1] - edges[0] : 0.0; }
  double tail_right() const { return tails ? edges[edges.size() - 1] - edges[edges.size() - 2] : 0.0; }
  void validate() const;
};

void to_json(nlohmann::json& j, const BarLayout& b);
void from_json(const nlohmann::json& j, BarLayout& b);

/// How targets map to the network's standardized units: y_std = (y - shift) / scale.
/// Per-task scaling derives shift and scale from each task's training targets.
struct TargetScaling {
  enum class Mode { per_task, fixed } mode = Mode::per_task;
  double shift = 0.0;
  double scale = 1.0;
};

void to_json(nlohmann::json& j, const TargetScaling& s);
void from_json(const nlohmann::json& j, TargetScaling& s);

/// Equal-mass bins over a pooled sample of standardized targets. Interior edges
/// are clamped to [-clamp, clamp]; each outer edge sits one half-Normal scale
/// (median-based, from the sample beyond the inner edge) past its neighbour.
BarLayout equal_mass_layout(std::vector<double> sample, int n_bins, double clamp = 4.0);

}  // namespace pfn
