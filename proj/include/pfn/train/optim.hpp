#pragma once

#include <cmath>
#include <numbers>

#include "pfn/model/params.hpp"

namespace pfn {

/// Linear warmup to `peak` over `warmup` steps, then cosine decay to peak * floor_ratio at `steps`.
struct LrSchedule {
  double peak = 1e-3;
  int warmup = 100;
  int steps = 1000;
  double floor_ratio = 0.05;

  double at(int step) const {
    if (step < warmup) return peak * static_cast<double>(step + 1) / static_cast<double>(warmup);
    const double span = std::max(1, steps - warmup);
    const double t = std::min(1.0, static_cast<double>(step - warmup) / span);
    return peak * (floor_ratio + (1.0 - floor_ratio) * 0.5 * (1.0 + std::cos(std::numbers::pi * t)));
  }
};

/// Global L2 norm over every tensor of a gradient store.
template <class Scalar>
double global_norm(const ParamStore<Scalar>& g) {
  double ss = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) ss += g[i].data().template cast<double>().squaredNorm();
  return std::sqrt(ss);
}

/// Rescales gradients so that their global norm is at most max_norm. Returns the norm before clipping.
template <class Scalar>
double clip_global_norm(ParamStore<Scalar>& g, double max_norm) {
  const double norm = global_norm(g);
  if (norm > max_norm) {
    const auto s = static_cast<Scalar>(max_norm / norm);
    for (std::size_t i = 0; i < g.size(); ++i) g[i].data() *= s;
  }
  return norm;
}

/// Adam with bias correction.
template <class Scalar>
class Adam {
 public:
  Adam(const ParamStore<Scalar>& like, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : b1_(beta1), b2_(beta2), eps_(eps) {
    for (std::size_t i = 0; i < like.size(); ++i) {
      m_.push_back(VectorX<double>::Zero(like[i].size()));
      v_.push_back(VectorX<double>::Zero(like[i].size()));
    }
  }

  void step(ParamStore<Scalar>& params, const ParamStore<Scalar>& grads, double lr) {
    ++t_;
    if (lr == 0.0) return;
    const double c1 = 1.0 - std::pow(b1_, t_), c2 = 1.0 - std::pow(b2_, t_);
    for (std::size_t i = 0; i < params.size(); ++i) {
      const VectorX<double> g = grads[i].data().template cast<double>();
      m_[i] = b1_ * m_[i] + (1.0 - b1_) * g;
      v_[i] = b2_ * v_[i] + (1.0 - b2_) * g.cwiseProduct(g);
      const VectorX<double> upd = (m_[i] / c1).array() / ((v_[i] / c2).array().sqrt() + eps_);
      params[i].data() -= (lr * upd).template cast<Scalar>();
    }
  }

  long steps_taken() const { return t_; }

 private:
  double b1_, b2_, eps_;
  long t_ = 0;
  std::vector<VectorX<double>> m_, v_;
};

}  // namespace pfn
