#include "pfn/infer/predictive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "pfn/core/normal.hpp"

namespace pfn {

namespace {
constexpr double kHalfNormalMean = 0.7978845608028654;  // sqrt(2/pi)
}

void PredictiveDistribution::validate() const {
  require(!masses.empty(), ErrorKind::contract, "distribution has no bins");
  require(edges.size() == masses.size() + 1, ErrorKind::contract, "edges must have n_bins + 1 entries");
  for (std::size_t i = 1; i < edges.size(); ++i)
    require(edges[i] > edges[i - 1], ErrorKind::contract, "bin edges must be strictly increasing");
  double total = 0.0;
  for (double m : masses) {
    require(m >= 0.0 && std::isfinite(m), ErrorKind::contract, "bin masses must be finite and non-negative");
    total += m;
  }
  require(std::abs(total - 1.0) <= 1e-6, ErrorKind::contract, "bin masses must sum to 1");
  require(tail_left >= 0.0 && tail_right >= 0.0, ErrorKind::contract, "tail scales must be non-negative");
  require(masses.size() >= 2 || (!left_tail() && !right_tail()), ErrorKind::contract,
          "tails need at least two bins");
}

double PredictiveDistribution::mean() const {
  const std::size_t n = masses.size();
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double centroid = 0.5 * (edges[i] + edges[i + 1]);
    if (i == 0 && left_tail()) centroid = edges[1] - tail_left * kHalfNormalMean;
    if (i == n - 1 && right_tail()) centroid = edges[n - 1] + tail_right * kHalfNormalMean;
    m += masses[i] * centroid;
  }
  return m;
}

double PredictiveDistribution::cdf(double x) const {
  const std::size_t n = masses.size();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const bool lt = i == 0 && left_tail();
    const bool rt = i == n - 1 && right_tail();
    if (lt) {
      if (x <= edges[1]) return masses[0] * std::erfc((edges[1] - x) / (tail_left * std::numbers::sqrt2));
    } else if (rt) {
      if (x <= edges[n - 1]) return acc;
      return acc + masses[i] * (1.0 - std::erfc((x - edges[n - 1]) / (tail_right * std::numbers::sqrt2)));
    } else {
      if (x <= edges[i]) return acc;
      if (x < edges[i + 1]) return acc + masses[i] * (x - edges[i]) / (edges[i + 1] - edges[i]);
    }
    acc += masses[i];
  }
  return acc;
}

double PredictiveDistribution::quantile(double p) const {
  require(p > 0.0 && p < 1.0, ErrorKind::contract, "quantile level must lie in (0, 1)");
  const std::size_t n = masses.size();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double m = masses[i];
    const bool rt = i == n - 1 && right_tail();
    if (m > 0.0 && (acc + m >= p || rt)) {
      if (i == 0 && left_tail()) {
        return edges[1] - tail_left * normal_quantile(1.0 - p / (2.0 * m));
      }
      if (rt) {
        const double q = std::max(p - acc, 0.0) / m;  // fraction of the tail mass below the quantile
        return edges[n - 1] + tail_right * normal_quantile(0.5 + 0.5 * std::min(q, 1.0));
      }
      const double frac = std::clamp((p - acc) / m, 0.0, 1.0);
      return edges[i] + frac * (edges[i + 1] - edges[i]);
    }
    acc += m;
  }
  return edges[n];
}

double PredictiveDistribution::density(double x) const {
  const std::size_t n = masses.size();
  if (left_tail() && x <= edges[1]) {
    return masses[0] * 2.0 / tail_left * normal_pdf((edges[1] - x) / tail_left);
  }
  if (right_tail() && x >= edges[n - 1]) {
    return masses[n - 1] * 2.0 / tail_right * normal_pdf((x - edges[n - 1]) / tail_right);
  }
  if (x < edges[0] || x >= edges[n]) return 0.0;
  const auto it = std::upper_bound(edges.begin(), edges.end(), x);
  const auto i = static_cast<std::size_t>(it - edges.begin()) - 1;
  return masses[i] / (edges[i + 1] - edges[i]);
}

double PredictiveDistribution::log_density(double x) const {
  const double d = density(x);
  return d > 0.0 ? std::log(d) : -std::numeric_limits<double>::infinity();
}

PredictiveDistribution PredictiveDistribution::affine(double a, double b) const {
  require(a > 0.0, ErrorKind::contract, "affine map needs a positive scale");
  PredictiveDistribution out = *this;
  for (double& e : out.edges) e = a * e + b;
  out.tail_left *= a;
  out.tail_right *= a;
  return out;
}

double mean(const PredictiveDistribution& d) { return d.mean(); }

double quantile(const PredictiveDistribution& d, double p) { return d.quantile(p); }

Prediction summarize(PredictiveDistribution d) {
  Prediction p;
  p.mean = d.mean();
  p.q025 = d.quantile(0.025);
  p.q500 = d.quantile(0.5);
  p.q975 = d.quantile(0.975);
  p.distribution = std::move(d);
  return p;
}

void to_json(nlohmann::json& j, const PredictiveDistribution& d) {
  j = nlohmann::json{{"edges", d.edges}, {"masses", d.masses}, {"tail_left", d.tail_left}, {"tail_right", d.tail_right}};
}

void from_json(const nlohmann::json& j, PredictiveDistribution& d) {
  d.edges = j.at("edges").get<std::vector<double>>();
  d.masses = j.at("masses").get<std::vector<double>>();
  d.tail_left = j.value("tail_left", 0.0);
  d.tail_right = j.value("tail_right", 0.0);
  d.validate();
}

}  // namespace pfn
