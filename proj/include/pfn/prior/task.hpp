#pragma once

#include <optional>
#include <vector>

#include "pfn/numcore/tensor.hpp"

namespace pfn {

using MaskR = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class FeatureKind { continuous, categorical };

/// One in-context episode. A set mask bit marks a missing input cell; the
/// stored value under a set bit is ignored.
struct Task {
  MatrixR<double> x_train;
  MaskR missing_train;
  Eigen::VectorXd y_train;
  MatrixR<double> x_test;
  MaskR missing_test;
  std::optional<Eigen::VectorXd> y_test;
  std::vector<FeatureKind> schema;

  Index n_features() const { return static_cast<Index>(schema.size()); }
  Index n_train() const { return y_train.size(); }
  Index n_test() const { return x_test.rows(); }

  /// Throws a contract error when shapes or schema disagree.
  void validate() const;
};

bool operator==(const Task& a, const Task& b);

}  // namespace pfn
