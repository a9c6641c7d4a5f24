#pragma once

#include <json.hpp>
#include <vector>

#include "pfn/numcore/tensor.hpp"

namespace pfn {

/// Piecewise-constant density over `edges`. A positive tail scale turns the
/// outermost bin on that side into a half-Normal extending away from the
/// inner edge of that bin (edges[1] on the left, edges[n-1] on the right);
/// with a zero scale the bin is a plain uniform bin.
struct PredictiveDistribution {
  std::vector<double> edges;
  std::vector<double> masses;
  double tail_left = 0.0;
  double tail_right = 0.0;

  Index n_bins() const { return static_cast<Index>(masses.size()); }
  bool left_tail() const { return tail_left > 0.0; }
  bool right_tail() const { return tail_right > 0.0; }

  /// Throws a contract error on non-increasing edges or masses that are not a distribution.
  void validate() const;

  double mean() const;
  double cdf(double x) const;
  double quantile(double p) const;
  double density(double x) const;
  double log_density(double x) const;

  /// Distribution of a * Y + b for a > 0.
  PredictiveDistribution affine(double a, double b) const;
};

double mean(const PredictiveDistribution& d);
double quantile(const PredictiveDistribution& d, double p);

/// Summary of one test row's predictive; `distribution` is empty for sample-based baselines.
struct Prediction {
  std::optional<PredictiveDistribution> distribution;
  double mean = 0.0;
  double q025 = 0.0;
  double q500 = 0.0;
  double q975 = 0.0;
};

Prediction summarize(PredictiveDistribution d);

void to_json(nlohmann::json& j, const PredictiveDistribution& d);
void from_json(const nlohmann::json& j, PredictiveDistribution& d);

}  // namespace pfn
