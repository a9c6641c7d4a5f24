#include "pfn/model/encode.hpp"

#include <algorithm>
#include <cmath>

namespace pfn {

namespace {

bool observed(const MatrixR<double>& x, const MaskR& missing, Index r, Index c) {
  return !missing(r, c) && std::isfinite(x(r, c));
}

}  // namespace

FeatureScaling fit_feature_scaling(const Task& task) {
  const Index f = task.n_features();
  FeatureScaling s{Eigen::VectorXd::Zero(f), Eigen::VectorXd::Ones(f)};
  for (Index c = 0; c < f; ++c) {
    double sum = 0.0, sq = 0.0;
    Index n = 0;
    for (Index r = 0; r < task.n_train(); ++r) {
      if (!observed(task.x_train, task.missing_train, r, c)) continue;
      sum += task.x_train(r, c);
      ++n;
    }
    if (n == 0) continue;
    const double mean = sum / static_cast<double>(n);
    for (Index r = 0; r < task.n_train(); ++r) {
      if (observed(task.x_train, task.missing_train, r, c)) sq += (task.x_train(r, c) - mean) * (task.x_train(r, c) - mean);
    }
    const double sd = std::sqrt(sq / static_cast<double>(n));
    s.mean[c] = mean;
    s.sd[c] = sd < 1e-8 ? 1.0 : sd;
  }
  return s;
}

TargetScaling resolve_target_scaling(const TargetScaling& base, const Eigen::VectorXd& y_train) {
  if (base.mode == TargetScaling::Mode::fixed) return base;
  require(y_train.size() > 0, ErrorKind::empty_context, "task has no training rows");
  TargetScaling s = base;
  s.shift = y_train.mean();
  s.scale = 1.0;
  if (y_train.size() >= 2) {
    const double sd = std::sqrt((y_train.array() - s.shift).square().mean());
    if (sd >= 1e-8) s.scale = sd;
  }
  return s;
}

CellGrid encode_task(const Task& task, const TargetScaling& base, Index test_begin, Index test_end) {
  task.validate();
  require(task.n_train() > 0, ErrorKind::empty_context, "task has no training rows");
  require(0 <= test_begin && test_begin <= test_end && test_end <= task.n_test(), ErrorKind::contract,
          "test row range out of bounds");
  for (Index r = 0; r < task.n_train(); ++r)
    require(std::isfinite(task.y_train[r]), ErrorKind::data, "training target is not finite");

  const Index f = task.n_features();
  CellGrid g;
  g.n_train = task.n_train();
  g.rows = g.n_train + (test_end - test_begin);
  g.cols = f + 1;
  g.scaling = resolve_target_scaling(base, task.y_train);
  g.cells = MatrixR<double>::Zero(g.rows * g.cols, kCellInputs);
  const FeatureScaling fs = fit_feature_scaling(task);

  for (Index r = 0; r < g.rows; ++r) {
    const bool train = r < g.n_train;
    const Index src = train ? r : test_begin + (r - g.n_train);
    const MatrixR<double>& x = train ? task.x_train : task.x_test;
    const MaskR& miss = train ? task.missing_train : task.missing_test;
    for (Index c = 0; c < f; ++c) {
      auto cell = g.cells.row(r * g.cols + c);
      cell[2] = 1.0;
      if (observed(x, miss, src, c)) {
        cell[0] = std::clamp((x(src, c) - fs.mean[c]) / fs.sd[c], -kFeatureClip, kFeatureClip);
      } else {
        cell[1] = 1.0;
      }
    }
    auto target = g.cells.row(r * g.cols + f);
    if (train) {
      target[3] = (task.y_train[src] - g.scaling.shift) / g.scaling.scale;
      target[4] = 1.0;
    } else {
      target[5] = 1.0;
      g.query_cells.push_back(r * g.cols + f);
    }
  }
  return g;
}

CellGrid encode_task(const Task& task, const TargetScaling& base) {
  return encode_task(task, base, 0, task.n_test());
}

}  // namespace pfn
