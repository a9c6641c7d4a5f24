#include "pfn/model/config.hpp"

#include <algorithm>
#include <cmath>

namespace pfn {

void ModelConfig::validate() const {
  require(embed_dim > 0 && n_heads > 0 && embed_dim % n_heads == 0, ErrorKind::config,
          "embed_dim must be a positive multiple of n_heads");
  require(n_layers >= 1, ErrorKind::config, "n_layers must be >= 1");
  require(mlp_hidden >= 1, ErrorKind::config, "mlp_hidden must be >= 1");
  require(n_bins >= 8, ErrorKind::config, "n_bins must be >= 8");
  require(dropout_rate >= 0.0 && dropout_rate < 1.0, ErrorKind::config, "dropout_rate must lie in [0, 1)");
  require(max_features >= 0 && max_rows >= 2, ErrorKind::config, "capacity bounds are invalid");
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"embed_dim", c.embed_dim},       {"n_layers", c.n_layers},
                     {"n_heads", c.n_heads},           {"mlp_hidden", c.mlp_hidden},
                     {"n_bins", c.n_bins},             {"dropout_rate", c.dropout_rate},
                     {"max_features", c.max_features}, {"max_rows", c.max_rows}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  c = ModelConfig{};
  c.embed_dim = j.value("embed_dim", c.embed_dim);
  c.n_layers = j.value("n_layers", c.n_layers);
  c.n_heads = j.value("n_heads", c.n_heads);
  c.mlp_hidden = j.value("mlp_hidden", c.mlp_hidden);
  c.n_bins = j.value("n_bins", c.n_bins);
  c.dropout_rate = j.value("dropout_rate", c.dropout_rate);
  c.max_features = j.value("max_features", c.max_features);
  c.max_rows = j.value("max_rows", c.max_rows);
  c.validate();
}

void BarLayout::validate() const {
  require(edges.size() >= 2, ErrorKind::contract, "bar layout needs at least one bin");
  for (std::size_t i = 1; i < edges.size(); ++i)
    require(edges[i] > edges[i - 1], ErrorKind::contract, "bar edges must be strictly increasing");
  require(!tails || edges.size() >= 3, ErrorKind::contract, "tails need at least two bins");
}

void to_json(nlohmann::json& j, const BarLayout& b) {
  j = nlohmann::json{{"strategy", "prior_equal_mass"}, {"edges", b.edges}, {"tails", b.tails}};
}

void from_json(const nlohmann::json& j, BarLayout& b) {
  b.edges = j.at("edges").get<std::vector<double>>();
  b.tails = j.value("tails", true);
  b.validate();
}

void to_json(nlohmann::json& j, const TargetScaling& s) {
  j = nlohmann::json{{"mode", s.mode == TargetScaling::Mode::per_task ? "per_task" : "fixed"},
                     {"shift", s.shift},
                     {"scale", s.scale}};
}

void from_json(const nlohmann::json& j, TargetScaling& s) {
  const auto mode = j.at("mode").get<std::string>();
  require(mode == "per_task" || mode == "fixed", ErrorKind::config, "unknown target scaling '" + mode + "'");
  s.mode = mode == "per_task" ? TargetScaling::Mode::per_task : TargetScaling::Mode::fixed;
  s.shift = j.value("shift", 0.0);
  s.scale = j.value("scale", 1.0);
  require(s.scale > 0.0, ErrorKind::config, "target scale must be positive");
}

BarLayout equal_mass_layout(std::vector<double> sample, int n_bins, double clamp) {
  require(n_bins >= 2, ErrorKind::contract, "equal-mass layout needs at least two bins");
  require(sample.size() >= static_cast<std::size_t>(n_bins), ErrorKind::contract,
          "equal-mass layout needs at least n_bins samples");
  std::sort(sample.begin(), sample.end());
  const auto n = sample.size();
  std::vector<double> inner;  // edges 1..n_bins-1
  for (int k = 1; k < n_bins; ++k) {
    const double pos = static_cast<double>(k) / n_bins * static_cast<double>(n - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, n - 1);
    const double v = sample[lo] + (pos - static_cast<double>(lo)) * (sample[hi] - sample[lo]);
    inner.push_back(std::clamp(v, -clamp, clamp));
  }
  constexpr double kGap = 1e-3;
  for (std::size_t i = 1; i < inner.size(); ++i) inner[i] = std::max(inner[i], inner[i - 1] + kGap);

  // Half-Normal scale from the median excess beyond each inner edge. The median
  // keeps a few huge standardized values (near-constant y_train) from inflating it.
  auto tail_scale = [&](bool left) {
    const double e = left ? inner.front() : inner.back();
    std::vector<double> excess;
    for (double v : sample)
      if (left ? v < e : v > e) excess.push_back(std::abs(v - e));
    if (excess.empty()) return 0.05;
    const auto mid = excess.begin() + static_cast<std::ptrdiff_t>(excess.size() / 2);
    std::nth_element(excess.begin(), mid, excess.end());
    constexpr double kHalfNormalMedian = 0.6744897501960817;  // median of |Z|
    return std::max(*mid / kHalfNormalMedian, 0.05);
  };
  BarLayout layout;
  layout.tails = true;
  layout.edges.push_back(inner.front() - tail_scale(true));
  layout.edges.insert(layout.edges.end(), inner.begin(), inner.end());
  layout.edges.push_back(inner.back() + tail_scale(false));
  layout.validate();
  return layout;
}

}  // namespace pfn
