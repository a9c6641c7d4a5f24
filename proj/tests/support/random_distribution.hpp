#pragma once

#include <random>

#include "pfn/infer/predictive.hpp"

namespace pfn::testing {

/// Random bar distribution with uneven edges, some empty bins and optional tails.
inline PredictiveDistribution random_distribution(std::mt19937_64& rng, bool tails) {
  std::uniform_int_distribution<int> nb(2, 40);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int n = nb(rng);
  PredictiveDistribution d;
  double e = -5.0 + 10.0 * u(rng);
  d.edges.push_back(e);
  for (int i = 0; i < n; ++i) {
    e += 0.05 + 2.0 * u(rng);
    d.edges.push_back(e);
  }
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const double m = u(rng) < 0.15 ? 0.0 : std::exp(3.0 * u(rng));
    d.masses.push_back(m);
    total += m;
  }
  if (total == 0.0) {
    d.masses[0] = 1.0;
    total = 1.0;
  }
  for (double& m : d.masses) m /= total;
  if (tails) {
    d.tail_left = d.edges[1] - d.edges[0];
    d.tail_right = d.edges[n] - d.edges[n - 1];
  }
  return d;
}

/// Midpoint-rule integral of x * density(x) over a window wide enough to hold the tails.
inline double quadrature_mean(const PredictiveDistribution& d, int points) {
  const double pad = 12.0 * std::max(d.tail_left, d.tail_right);
  const double lo = d.edges.front() - pad, hi = d.edges.back() + pad;
  const double h = (hi - lo) / points;
  double acc = 0.0;
  for (int i = 0; i < points; ++i) {
    const double x = lo + (i + 0.5) * h;
    acc += x * d.density(x) * h;
  }
  return acc;
}

}  // namespace pfn::testing
