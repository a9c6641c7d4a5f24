#pragma once

#include <vector>

#include "pfn/model/config.hpp"
#include "pfn/numcore/tensor.hpp"
#include "pfn/prior/task.hpp"

namespace pfn {

/// Per-cell input channels: [value*f, missing*f, f, y*t, t, q] where f marks a
/// feature cell, t a training target cell and q a query (test target) cell.
inline constexpr Index kCellInputs = 6;
inline constexpr double kFeatureClip = 8.0;

/// A task laid out as a grid: rows are training rows then test rows, columns are
/// the features then the target. Cell (r, c) is row r * cols + c of `cells`.
struct CellGrid {
  MatrixR<double> cells;
  Index rows = 0;
  Index cols = 0;
  Index n_train = 0;
  std::vector<Index> query_cells;
  TargetScaling scaling;
};

struct FeatureScaling {
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;
};

/// Mean and standard deviation of the observed training values of each feature.
FeatureScaling fit_feature_scaling(const Task& task);

/// Resolves per-task scaling from the training targets; fixed scaling is returned unchanged.
TargetScaling resolve_target_scaling(const TargetScaling& base, const Eigen::VectorXd& y_train);

/// Encodes all training rows plus test rows [test_begin, test_end). Never reads y_test.
CellGrid encode_task(const Task& task, const TargetScaling& base, Index test_begin, Index test_end);
CellGrid encode_task(const Task& task, const TargetScaling& base);

}  // namespace pfn
