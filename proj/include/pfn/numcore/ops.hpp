#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>

#include "pfn/numcore/tape.hpp"

namespace pfn {

namespace detail {

template <class Scalar>
void require_same_tape(const Var<Scalar>& a, const Var<Scalar>& b) {
  require(a.tape == b.tape && a.tape != nullptr, ErrorKind::contract, "operands live on different tapes");
}

template <class Scalar>
void require_rank2(const Var<Scalar>& a, const char* op) {
  require(a.value().rank() == 2, ErrorKind::dimension,
          std::string(op) + " expects a rank-2 tensor, got " + shape_str(a.shape()));
}

/// Left-to-right sum; unlike vectorized reductions its rounding does not depend on alignment.
template <class Scalar>
Scalar ordered_sum(const Scalar* p, Index n) {
  Scalar acc(0);
  for (Index i = 0; i < n; ++i) acc += p[i];
  return acc;
}

/// out (n x m) = x (n x k) * w (k x m), all row-major. Every output element is
/// accumulated over k in order, so a row's result depends only on that row of x,
/// not on its position or on n. Used for forward passes that are not recorded.
template <class Scalar, int Rows>
void product_tile(const Scalar* __restrict x, Index k, const Scalar* __restrict w, Index m, Index j0, Index jb,
                  Scalar* __restrict out) {
  constexpr Index kCols = 32;
  Scalar acc[Rows][kCols] = {};
  if (jb == kCols) {
    for (Index kk = 0; kk < k; ++kk) {
      const Scalar* __restrict wr = w + kk * m + j0;
      for (int r = 0; r < Rows; ++r) {
        const Scalar a = x[r * k + kk];
        for (Index j = 0; j < kCols; ++j) acc[r][j] += a * wr[j];
      }
    }
  } else {
    for (Index kk = 0; kk < k; ++kk) {
      const Scalar* __restrict wr = w + kk * m + j0;
      for (int r = 0; r < Rows; ++r) {
        const Scalar a = x[r * k + kk];
        for (Index j = 0; j < jb; ++j) acc[r][j] += a * wr[j];
      }
    }
  }
  for (int r = 0; r < Rows; ++r)
    for (Index j = 0; j < jb; ++j) out[r * m + j0 + j] = acc[r][j];
}

/// out (n x m) = x (n x k) * w (k x m), all row-major. Every output element is
/// accumulated over k in order, so a row's result depends only on that row of x,
/// not on its position or on n. Used for forward passes that are not recorded.
template <class Scalar>
void product_rows(const Scalar* x, Index n, Index k, const Scalar* w, Index m, Scalar* out) {
  constexpr Index kCols = 32;
  Index i = 0;
  for (; i + 4 <= n; i += 4)
    for (Index j0 = 0; j0 < m; j0 += kCols)
      product_tile<Scalar, 4>(x + i * k, k, w, m, j0, std::min(kCols, m - j0), out + i * m);
  for (; i < n; ++i)
    for (Index j0 = 0; j0 < m; j0 += kCols)
      product_tile<Scalar, 1>(x + i * k, k, w, m, j0, std::min(kCols, m - j0), out + i * m);
}

template <class Scalar>
void forward_product(const Tensor<Scalar>& a, const Tensor<Scalar>& b, Tensor<Scalar>& out, bool recording) {
  if (recording) {
    out.mat().noalias() = a.mat() * b.mat();
  } else {
    product_rows(a.data().data(), a.rows(), a.cols(), b.data().data(), b.cols(), out.data().data());
  }
}

}  // namespace detail

template <class Scalar>
Var<Scalar> matmul(const Var<Scalar>& a, const Var<Scalar>& b) {
  detail::require_same_tape(a, b);
  detail::require_rank2(a, "matmul");
  detail::require_rank2(b, "matmul");
  const auto& av = a.value();
  const auto& bv = b.value();
  require(av.cols() == bv.rows(), ErrorKind::dimension,
          "matmul inner extents differ: " + shape_str(av.shape()) + " x " + shape_str(bv.shape()));
  Tensor<Scalar> out({av.rows(), bv.cols()});
  detail::forward_product(av, bv, out, a.tape->recording());
  const Index ia = a.id, ib = b.id;
  return a.tape->push(std::move(out), a.requires_grad() || b.requires_grad(),
                      [ia, ib](GradTape<Scalar>& t, Index self) {
                        const auto g = t.grad(self).mat();
                        if (t.requires_grad(ia)) t.grad_buffer(ia).mat().noalias() += g * t.value(ib).mat().transpose();
                        if (t.requires_grad(ib)) t.grad_buffer(ib).mat().noalias() += t.value(ia).mat().transpose() * g;
                      });
}

template <class Scalar>
Var<Scalar> add(const Var<Scalar>& a, const Var<Scalar>& b) {
  detail::require_same_tape(a, b);
  require(a.value().same_shape(b.value()), ErrorKind::dimension,
          "add shapes differ: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  Tensor<Scalar> out(a.shape(), a.value().data() + b.value().data());
  const Index ia = a.id, ib = b.id;
  return a.tape->push(std::move(out), a.requires_grad() || b.requires_grad(),
                      [ia, ib](GradTape<Scalar>& t, Index self) {
                        const auto& g = t.grad(self).data();
                        if (t.requires_grad(ia)) t.grad_buffer(ia).data() += g;
                        if (t.requires_grad(ib)) t.grad_buffer(ib).data() += g;
                      });
}

template <class Scalar>
Var<Scalar> operator+(const Var<Scalar>& a, const Var<Scalar>& b) {
  return add(a, b);
}

/// Elementwise product of equally shaped tensors.
template <class Scalar>
Var<Scalar> mul(const Var<Scalar>& a, const Var<Scalar>& b) {
  detail::require_same_tape(a, b);
  require(a.value().same_shape(b.value()), ErrorKind::dimension,
          "mul shapes differ: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  Tensor<Scalar> out(a.shape(), a.value().data().cwiseProduct(b.value().data()));
  const Index ia = a.id, ib = b.id;
  return a.tape->push(std::move(out), a.requires_grad() || b.requires_grad(),
                      [ia, ib](GradTape<Scalar>& t, Index self) {
                        const auto& g = t.grad(self).data();
                        if (t.requires_grad(ia)) t.grad_buffer(ia).data() += g.cwiseProduct(t.value(ib).data());
                        if (t.requires_grad(ib)) t.grad_buffer(ib).data() += g.cwiseProduct(t.value(ia).data());
                      });
}

template <class Scalar>
Var<Scalar> scale(const Var<Scalar>& a, Scalar s) {
  Tensor<Scalar> out(a.shape(), a.value().data() * s);
  const Index ia = a.id;
  return a.tape->push(std::move(out), a.requires_grad(), [ia, s](GradTape<Scalar>& t, Index self) {
    t.grad_buffer(ia).data() += t.grad(self).data() * s;
  });
}

template <class Scalar>
Var<Scalar> sum(const Var<Scalar>& a) {
  Tensor<Scalar> out = Tensor<Scalar>::scalar(a.value().data().sum());
  const Index ia = a.id;
  return a.tape->push(std::move(out), a.requires_grad(), [ia](GradTape<Scalar>& t, Index self) {
    t.grad_buffer(ia).data().array() += t.grad(self)[0];
  });
}

/// x (N x D) plus a length-D row vector added to every row.
template <class Scalar>
Var<Scalar> add_row(const Var<Scalar>& x, const Var<Scalar>& bias) {
  detail::require_same_tape(x, bias);
  detail::require_rank2(x, "add_row");
  require(bias.value().rank() == 1 && bias.value().cols() == x.value().cols(), ErrorKind::dimension,
          "add_row bias " + shape_str(bias.shape()) + " does not match " + shape_str(x.shape()));
  Tensor<Scalar> out(x.shape());
  out.mat() = x.value().mat().rowwise() + bias.value().mat().row(0);
  const Index ix = x.id, ib = bias.id;
  return x.tape->push(std::move(out), x.requires_grad() || bias.requires_grad(),
                      [ix, ib](GradTape<Scalar>& t, Index self) {
                        const auto g = t.grad(self).mat();
                        if (t.requires_grad(ix)) t.grad_buffer(ix).mat() += g;
                        if (t.requires_grad(ib)) t.grad_buffer(ib).mat().row(0) += g.colwise().sum();
                      });
}

/// x (N x in) * w (in x out) + b (out), fused.
template <class Scalar>
Var<Scalar> linear(const Var<Scalar>& x, const Var<Scalar>& w, const Var<Scalar>& b) {
  detail::require_same_tape(x, w);
  detail::require_same_tape(x, b);
  detail::require_rank2(x, "linear");
  detail::require_rank2(w, "linear");
  require(x.value().cols() == w.value().rows(), ErrorKind::dimension,
          "linear input " + shape_str(x.shape()) + " does not match weight " + shape_str(w.shape()));
  require(b.value().rank() == 1 && b.value().cols() == w.value().cols(), ErrorKind::dimension,
          "linear bias " + shape_str(b.shape()) + " does not match weight " + shape_str(w.shape()));
  Tensor<Scalar> out({x.value().rows(), w.value().cols()});
  detail::forward_product(x.value(), w.value(), out, x.tape->recording());
  out.mat().rowwise() += b.value().mat().row(0);
  const Index ix = x.id, iw = w.id, ib = b.id;
  return x.tape->push(std::move(out), x.requires_grad() || w.requires_grad() || b.requires_grad(),
                      [ix, iw, ib](GradTape<Scalar>& t, Index self) {
                        const auto g = t.grad(self).mat();
                        if (t.requires_grad(ix)) t.grad_buffer(ix).mat().noalias() += g * t.value(iw).mat().transpose();
                        if (t.requires_grad(iw)) t.grad_buffer(iw).mat().noalias() += t.value(ix).mat().transpose() * g;
                        if (t.requires_grad(ib)) t.grad_buffer(ib).mat().row(0) += g.colwise().sum();
                      });
}

/// Tanh-approximated GELU.
template <class Scalar>
Var<Scalar> gelu(const Var<Scalar>& a) {
  constexpr Scalar c = Scalar(0.7978845608028654);  // sqrt(2/pi)
  constexpr Scalar k = Scalar(0.044715);
  const auto x = a.value().data().array();
  Tensor<Scalar> th(a.shape());
  th.data().array() = (c * (x + k * x.cube())).tanh();
  Tensor<Scalar> out(a.shape());
  out.data().array() = Scalar(0.5) * x * (Scalar(1) + th.data().array());
  const Index ia = a.id;
  return a.tape->push(std::move(out), a.requires_grad(),
                      [ia, th = std::move(th), c, k](GradTape<Scalar>& t, Index self) {
                        const auto xv = t.value(ia).data().array();
                        const auto tv = th.data().array();
                        const auto dy = Scalar(0.5) * (Scalar(1) + tv) +
                                        Scalar(0.5) * xv * (Scalar(1) - tv.square()) * c *
                                            (Scalar(1) + Scalar(3) * k * xv.square());
                        t.grad_buffer(ia).data().array() += t.grad(self).data().array() * dy;
                      });
}

/// Softmax of a rank-1 or rank-2 tensor along `axis`, stabilized by max subtraction.
template <class Scalar>
Var<Scalar> softmax(const Var<Scalar>& a, int axis) {
  const Index rank = a.value().rank();
  require(rank == 1 || rank == 2, ErrorKind::dimension, "softmax expects rank 1 or 2, got " + shape_str(a.shape()));
  require(axis >= 0 && axis < rank, ErrorKind::dimension, "softmax axis " + std::to_string(axis) + " out of range");
  const bool along_rows = (rank == 1) || axis == 1;  // normalize each row
  Tensor<Scalar> out(a.shape());
  auto y = out.mat();
  const auto x = a.value().mat();
  if (along_rows) {
    for (Index r = 0; r < x.rows(); ++r) {
      y.row(r) = (x.row(r).array() - x.row(r).maxCoeff()).exp();
      y.row(r) /= y.row(r).sum();
    }
  } else {
    for (Index c = 0; c < x.cols(); ++c) {
      y.col(c) = (x.col(c).array() - x.col(c).maxCoeff()).exp();
      y.col(c) /= y.col(c).sum();
    }
  }
  const Index ia = a.id;
  return a.tape->push(std::move(out), a.requires_grad(), [ia, along_rows](GradTape<Scalar>& t, Index self) {
    const auto yv = t.value(self).mat();
    const auto g = t.grad(self).mat();
    auto dx = t.grad_buffer(ia).mat();
    if (along_rows) {
      for (Index r = 0; r < yv.rows(); ++r) {
        const Scalar dot = g.row(r).dot(yv.row(r));
        dx.row(r).array() += yv.row(r).array() * (g.row(r).array() - dot);
      }
    } else {
      for (Index c = 0; c < yv.cols(); ++c) {
        const Scalar dot = g.col(c).dot(yv.col(c));
        dx.col(c).array() += yv.col(c).array() * (g.col(c).array() - dot);
      }
    }
  });
}

/// Normalizes each row of x (N x D) to zero mean and unit variance, then applies gain and bias.
template <class Scalar>
Var<Scalar> layer_norm(const Var<Scalar>& x, const Var<Scalar>& gain, const Var<Scalar>& bias, Scalar eps = Scalar(1e-5)) {
  detail::require_same_tape(x, gain);
  detail::require_same_tape(x, bias);
  detail::require_rank2(x, "layer_norm");
  const Index n = x.value().rows(), d = x.value().cols();
  require(gain.value().size() == d && bias.value().size() == d, ErrorKind::dimension,
          "layer_norm gain/bias must have length " + std::to_string(d));
  Tensor<Scalar> xhat({n, d});
  VectorX<Scalar> inv_std(n);
  const auto xv = x.value().mat();
  for (Index r = 0; r < n; ++r) {
    const Scalar* row = xv.row(r).data();
    const Scalar mu = detail::ordered_sum(row, d) / Scalar(d);
    Scalar ss(0);
    for (Index c = 0; c < d; ++c) ss += (row[c] - mu) * (row[c] - mu);
    const Scalar var = ss / Scalar(d);
    inv_std[r] = Scalar(1) / std::sqrt(var + eps);
    xhat.mat().row(r) = (xv.row(r).array() - mu) * inv_std[r];
  }
  Tensor<Scalar> out({n, d});
  out.mat() = (xhat.mat().array().rowwise() * gain.value().mat().row(0).array()).matrix();
  out.mat().rowwise() += bias.value().mat().row(0);
  const Index ix = x.id, ig = gain.id, ib = bias.id;
  return x.tape->push(
      std::move(out), x.requires_grad() || gain.requires_grad() || bias.requires_grad(),
      [ix, ig, ib, xhat = std::move(xhat), inv_std = std::move(inv_std)](GradTape<Scalar>& t, Index self) {
        const auto g = t.grad(self).mat();
        const auto xh = xhat.mat();
        if (t.requires_grad(ig)) t.grad_buffer(ig).mat().row(0) += g.cwiseProduct(xh).colwise().sum();
        if (t.requires_grad(ib)) t.grad_buffer(ib).mat().row(0) += g.colwise().sum();
        if (t.requires_grad(ix)) {
          auto dx = t.grad_buffer(ix).mat();
          const auto gv = t.value(ig).mat().row(0).array();
          for (Index r = 0; r < xh.rows(); ++r) {
            const auto dxh = (g.row(r).array() * gv).eval();
            const Scalar m1 = dxh.mean();
            const Scalar m2 = (dxh * xh.row(r).array()).mean();
            dx.row(r).array() += inv_std[r] * (dxh - m1 - xh.row(r).array() * m2);
          }
        }
      });
}

/// Rows of x selected by index; backward scatter-adds.
template <class Scalar>
Var<Scalar> gather_rows(const Var<Scalar>& x, std::span<const Index> rows) {
  detail::require_rank2(x, "gather_rows");
  const auto xv = x.value().mat();
  Tensor<Scalar> out({static_cast<Index>(rows.size()), xv.cols()});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i] >= 0 && rows[i] < xv.rows(), ErrorKind::dimension, "gather_rows index out of range");
    out.mat().row(static_cast<Index>(i)) = xv.row(rows[i]);
  }
  const Index ix = x.id;
  std::vector<Index> idx(rows.begin(), rows.end());
  return x.tape->push(std::move(out), x.requires_grad(), [ix, idx = std::move(idx)](GradTape<Scalar>& t, Index self) {
    const auto g = t.grad(self).mat();
    auto dx = t.grad_buffer(ix).mat();
    for (std::size_t i = 0; i < idx.size(); ++i) dx.row(idx[i]) += g.row(static_cast<Index>(i));
  });
}

/// Inverted dropout; identity when rate is zero or the tape is not recording.
template <class Scalar>
Var<Scalar> dropout(const Var<Scalar>& x, double rate, std::uint64_t seed) {
  if (rate <= 0.0 || !x.tape->recording()) return x;
  require(rate < 1.0, ErrorKind::contract, "dropout rate must be < 1");
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution keep(1.0 - rate);
  Tensor<Scalar> mask(x.shape());
  const Scalar s = Scalar(1.0 / (1.0 - rate));
  for (Index i = 0; i < mask.size(); ++i) mask[i] = keep(rng) ? s : Scalar(0);
  Tensor<Scalar> out(x.shape(), x.value().data().cwiseProduct(mask.data()));
  const Index ix = x.id;
  return x.tape->push(std::move(out), x.requires_grad(), [ix, mask = std::move(mask)](GradTape<Scalar>& t, Index self) {
    t.grad_buffer(ix).data() += t.grad(self).data().cwiseProduct(mask.data());
  });
}

}  // namespace pfn
