#include "pfn/model/network.hpp"

#include <cmath>

namespace pfn {

void check_capacity(const ModelConfig& cfg, const CellGrid& grid) {
  const Index features = grid.cols - 1;
  if (features > cfg.max_features) {
    fail(ErrorKind::capacity, "task has " + std::to_string(features) + " features; model supports at most " +
                                  std::to_string(cfg.max_features));
  }
  if (grid.n_train > cfg.max_rows) {
    fail(ErrorKind::capacity, "task has " + std::to_string(grid.n_train) + " training rows; model supports at most " +
                                  std::to_string(cfg.max_rows));
  }
  require(grid.n_train > 0, ErrorKind::empty_context, "task has no training rows");
}

PredictiveDistribution logits_to_distribution(const Eigen::Ref<const Eigen::VectorXd>& logits, const BarLayout& bars,
                                              const TargetScaling& scaling) {
  require(logits.size() == bars.n_bins(), ErrorKind::dimension,
          "got " + std::to_string(logits.size()) + " logits for " + std::to_string(bars.n_bins()) + " bins");
  const double top = logits.maxCoeff();
  require(std::isfinite(top), ErrorKind::numeric, "non-finite logits");
  Eigen::VectorXd e = (logits.array() - top).exp();
  e /= e.sum();
  PredictiveDistribution d;
  d.edges = bars.edges;
  d.masses.assign(e.data(), e.data() + e.size());
  d.tail_left = bars.tail_left();
  d.tail_right = bars.tail_right();
  return d.affine(scaling.scale, scaling.shift);
}

}  // namespace pfn
