#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pfn/model/config.hpp"
#include "pfn/numcore/tape.hpp"

namespace pfn {

/// Bin holding y; values beyond the outer edges fall into the outer bins.
inline int bar_bin(const BarLayout& bars, double y) {
  const auto& e = bars.edges;
  const auto it = std::upper_bound(e.begin() + 1, e.end() - 1, y);
  return static_cast<int>(it - e.begin()) - 1;
}

/// log of the within-bin density factor at y: -log(width) for a bar, the
/// half-Normal log density for a tail bin. Without tails an out-of-range y is
/// charged the density of the nearest bar.
inline double bar_log_shape(const BarLayout& bars, int bin, double y) {
  const auto& e = bars.edges;
  const int n = bars.n_bins();
  if (bars.tails && bin == 0 && y <= e[1]) {
    const double s = bars.tail_left(), d = (e[1] - y) / s;
    return std::log(2.0 / s) - 0.5 * std::log(2.0 * std::numbers::pi) - 0.5 * d * d;
  }
  if (bars.tails && bin == n - 1 && y >= e[n - 1]) {
    const double s = bars.tail_right(), d = (y - e[n - 1]) / s;
    return std::log(2.0 / s) - 0.5 * std::log(2.0 * std::numbers::pi) - 0.5 * d * d;
  }
  return -std::log(e[bin + 1] - e[bin]);
}

/// Mean negative log-likelihood of standardized targets under the bar
/// distributions given by each row of `logits`.
template <class Scalar>
Var<Scalar> bar_nll(const Var<Scalar>& logits, const Eigen::VectorXd& y, const BarLayout& bars) {
  const auto& z = logits.value();
  require(z.rank() == 2 && z.cols() == bars.n_bins(), ErrorKind::dimension,
          "bar_nll logits " + shape_str(z.shape()) + " do not match " + std::to_string(bars.n_bins()) + " bins");
  require(z.rows() == y.size() && y.size() > 0, ErrorKind::dimension, "bar_nll needs one target per logit row");
  const Index n = z.rows();
  MatrixR<Scalar> p(n, z.cols());
  std::vector<int> bins(static_cast<std::size_t>(n));
  double total = 0.0;
  for (Index r = 0; r < n; ++r) {
    const auto row = z.mat().row(r);
    const Scalar top = row.maxCoeff();
    p.row(r) = (row.array() - top).exp();
    const Scalar norm = p.row(r).sum();
    p.row(r) /= norm;
    const int b = bar_bin(bars, y[r]);
    bins[static_cast<std::size_t>(r)] = b;
    const double log_mass = static_cast<double>(row[b] - top) - std::log(static_cast<double>(norm));
    total -= log_mass + bar_log_shape(bars, b, y[r]);
  }
  const Index il = logits.id;
  return logits.tape->push(Tensor<Scalar>::scalar(static_cast<Scalar>(total / static_cast<double>(n))),
                           logits.requires_grad(),
                           [il, p = std::move(p), bins = std::move(bins)](GradTape<Scalar>& t, Index self) {
                             const Scalar g = t.grad(self)[0] / static_cast<Scalar>(p.rows());
                             auto gl = t.grad_buffer(il).mat();
                             gl += g * p;
                             for (Index r = 0; r < p.rows(); ++r) gl(r, bins[static_cast<std::size_t>(r)]) -= g;
                           });
}

}  // namespace pfn
