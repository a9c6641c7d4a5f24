#pragma once

// Finite-difference oracle for gradient checks. Evaluates the loss through plain
// forward passes only and never touches the tape's backward machinery.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "pfn/numcore/tensor.hpp"

namespace pfn::testing {

struct GradMismatch {
  std::string param;
  Index entry = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

/// Relative error with a floor so that two values both below `floor` compare as equal.
inline double relative_error(double a, double b, double floor = 1e-8) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Five-point central difference of `loss` along one coordinate of `x`.
inline double central_difference(const std::function<double()>& loss, double& x, double h) {
  const double x0 = x;
  x = x0 + h;
  const double fp1 = loss();
  x = x0 - h;
  const double fm1 = loss();
  x = x0 + 2 * h;
  const double fp2 = loss();
  x = x0 - 2 * h;
  const double fm2 = loss();
  x = x0;
  return (8.0 * (fp1 - fm1) - (fp2 - fm2)) / (12.0 * h);
}

}  // namespace pfn::testing
