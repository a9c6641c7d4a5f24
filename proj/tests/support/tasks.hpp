#pragma once

#include <random>

#include "pfn/prior/task.hpp"

namespace pfn::testing {

/// Small dense task with Gaussian features, a few missing cells and a noisy linear target.
inline Task random_task(std::mt19937_64& rng, Index n_train, Index n_test, Index n_features, double missing = 0.1) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::bernoulli_distribution m(missing);
  Task t;
  t.schema.assign(static_cast<std::size_t>(n_features), FeatureKind::continuous);
  auto fill = [&](MatrixR<double>& x, MaskR& mask, Index rows) {
    x.resize(rows, n_features);
    mask.resize(rows, n_features);
    for (Index r = 0; r < rows; ++r)
      for (Index c = 0; c < n_features; ++c) {
        x(r, c) = n(rng);
        mask(r, c) = m(rng);
      }
  };
  fill(t.x_train, t.missing_train, n_train);
  fill(t.x_test, t.missing_test, n_test);
  auto target = [&](const MatrixR<double>& x, Index r) {
    double y = 3.0;
    for (Index c = 0; c < n_features; ++c) y += (c + 1) * 0.5 * x(r, c);
    return y + 0.3 * n(rng);
  };
  t.y_train.resize(n_train);
  for (Index r = 0; r < n_train; ++r) t.y_train[r] = target(t.x_train, r);
  Eigen::VectorXd yt(n_test);
  for (Index r = 0; r < n_test; ++r) yt[r] = target(t.x_test, r);
  t.y_test = yt;
  return t;
}

}  // namespace pfn::testing
