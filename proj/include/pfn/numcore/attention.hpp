#pragma once

#include <cmath>
#include <vector>

#include "pfn/numcore/ops.hpp"

namespace pfn {

enum class Axis { row, column };

/// Layout of a cell grid stored as (rows * cols) x D with cell (r, c) at r * cols + c.
/// Along Axis::row each grid row is a group and cells attend to the first `n_keys`
/// cells of their row; along Axis::column each grid column is a group and cells
/// attend to the first `n_keys` rows of their column. Keys outside that prefix are
/// masked out. Every group also carries one learned sink key/value pair.
struct AxialSpec {
  Index rows = 0;
  Index cols = 0;
  Axis axis = Axis::row;
  Index n_keys = 0;
  Index heads = 1;

  Index groups() const { return axis == Axis::row ? rows : cols; }
  Index members() const { return axis == Axis::row ? cols : rows; }
  Index cell(Index group, Index member) const {
    return axis == Axis::row ? group * cols + member : member * cols + group;
  }
};

/// Multi-head attention over one axis of a cell grid.
/// qkv is (rows*cols) x 3D holding [Q | K | V]; sink_k and sink_v have length D.
template <class Scalar>
Var<Scalar> axial_attention(const Var<Scalar>& qkv, const Var<Scalar>& sink_k, const Var<Scalar>& sink_v,
                            const AxialSpec& spec) {
  detail::require_same_tape(qkv, sink_k);
  detail::require_same_tape(qkv, sink_v);
  detail::require_rank2(qkv, "axial_attention");
  const Index n_cells = spec.rows * spec.cols;
  require(qkv.value().rows() == n_cells, ErrorKind::dimension,
          "axial_attention expects " + std::to_string(n_cells) + " cells, got " + std::to_string(qkv.value().rows()));
  require(qkv.value().cols() % 3 == 0, ErrorKind::dimension, "axial_attention qkv width must be 3*D");
  const Index d = qkv.value().cols() / 3;
  require(spec.heads >= 1 && d % spec.heads == 0, ErrorKind::dimension, "embedding width not divisible by heads");
  require(sink_k.value().size() == d && sink_v.value().size() == d, ErrorKind::dimension, "sink width mismatch");
  require(spec.n_keys >= 0 && spec.n_keys <= spec.members(), ErrorKind::dimension, "n_keys exceeds group size");

  const Index dh = d / spec.heads;
  const Index nq = spec.members();
  const Index nk = spec.n_keys;
  const Scalar scl = Scalar(1) / std::sqrt(Scalar(dh));
  const bool keep = qkv.tape->recording() &&
                    (qkv.requires_grad() || sink_k.requires_grad() || sink_v.requires_grad());

  struct Saved {
    MatrixR<Scalar> p;    // nq x nk
    VectorX<Scalar> p0;  // nq, sink weight
  };
  std::vector<Saved> saved;
  if (keep) saved.resize(static_cast<std::size_t>(spec.groups() * spec.heads));

  const auto x = qkv.value().mat();
  const auto sk = sink_k.value().mat().row(0);
  const auto sv = sink_v.value().mat().row(0);
  Tensor<Scalar> out({n_cells, d});
  auto o = out.mat();

  if (!qkv.tape->recording()) {
    // Unrecorded path: the sink is an extra key column and every product and
    // reduction runs in a fixed per-row order, so equal queries give equal bits.
    MatrixR<Scalar> q(nq, dh), kt(dh, nk + 1), v(nk + 1, dh), s(nq, nk + 1), ob(nq, dh);
    for (Index g = 0; g < spec.groups(); ++g) {
      for (Index h = 0; h < spec.heads; ++h) {
        const Index off = h * dh;
        for (Index m = 0; m < nq; ++m) q.row(m) = x.row(spec.cell(g, m)).segment(off, dh) * scl;
        for (Index m = 0; m < nk; ++m) {
          kt.col(m) = x.row(spec.cell(g, m)).segment(d + off, dh).transpose();
          v.row(m) = x.row(spec.cell(g, m)).segment(2 * d + off, dh);
        }
        kt.col(nk) = sk.segment(off, dh).transpose();
        v.row(nk) = sv.segment(off, dh);
        detail::product_rows(q.data(), nq, dh, kt.data(), nk + 1, s.data());
        for (Index m = 0; m < nq; ++m) {
          Scalar* row = s.row(m).data();
          Scalar mx = row[nk];
          for (Index j = 0; j < nk; ++j) mx = std::max(mx, row[j]);
          for (Index j = 0; j <= nk; ++j) row[j] = std::exp(row[j] - mx);
          const Scalar z = detail::ordered_sum(row, nk + 1);
          for (Index j = 0; j <= nk; ++j) row[j] /= z;
        }
        detail::product_rows(s.data(), nq, nk + 1, v.data(), dh, ob.data());
        for (Index m = 0; m < nq; ++m) o.row(spec.cell(g, m)).segment(off, dh) = ob.row(m);
      }
    }
    return qkv.tape->push(std::move(out), false, nullptr);
  }

  MatrixR<Scalar> q(nq, dh), k(nk, dh), v(nk, dh), s(nq, nk);
  VectorX<Scalar> s0(nq);
  for (Index g = 0; g < spec.groups(); ++g) {
    for (Index h = 0; h < spec.heads; ++h) {
      const Index off = h * dh;
      for (Index m = 0; m < nq; ++m) q.row(m) = x.row(spec.cell(g, m)).segment(off, dh);
      for (Index m = 0; m < nk; ++m) {
        k.row(m) = x.row(spec.cell(g, m)).segment(d + off, dh);
        v.row(m) = x.row(spec.cell(g, m)).segment(2 * d + off, dh);
      }
      s.noalias() = (q * k.transpose()) * scl;
      s0.noalias() = (q * sk.segment(off, dh).transpose()) * scl;
      for (Index m = 0; m < nq; ++m) {
        const Scalar mx = nk > 0 ? std::max(s.row(m).maxCoeff(), s0[m]) : s0[m];
        s.row(m) = (s.row(m).array() - mx).exp();
        s0[m] = std::exp(s0[m] - mx);
        const Scalar z = s.row(m).sum() + s0[m];
        s.row(m) /= z;
        s0[m] /= z;
      }
      MatrixR<Scalar> ob = s * v;
      ob += s0 * sv.segment(off, dh);
      for (Index m = 0; m < nq; ++m) o.row(spec.cell(g, m)).segment(off, dh) = ob.row(m);
      if (keep) {
        auto& sv_ = saved[static_cast<std::size_t>(g * spec.heads + h)];
        sv_.p = s;
        sv_.p0 = s0;
      }
    }
  }

  const Index iq = qkv.id, isk = sink_k.id, isv = sink_v.id;
  return qkv.tape->push(
      std::move(out), keep,
      [iq, isk, isv, spec, d, dh, nq, nk, scl, saved = std::move(saved)](GradTape<Scalar>& t, Index self) {
        const auto x = t.value(iq).mat();
        const auto skv = t.value(isk).mat().row(0);
        const auto svv = t.value(isv).mat().row(0);
        const auto gout = t.grad(self).mat();
        const bool need_x = t.requires_grad(iq), need_sk = t.requires_grad(isk), need_sv = t.requires_grad(isv);
        Tensor<Scalar> dx_local;
        if (need_x) dx_local = Tensor<Scalar>(t.value(iq).shape());
        VectorX<Scalar> dsk = VectorX<Scalar>::Zero(d), dsv = VectorX<Scalar>::Zero(d);
        MatrixR<Scalar> q(nq, dh), k(nk, dh), v(nk, dh), go(nq, dh);
        for (Index g = 0; g < spec.groups(); ++g) {
          for (Index h = 0; h < spec.heads; ++h) {
            const Index off = h * dh;
            const auto& sd = saved[static_cast<std::size_t>(g * spec.heads + h)];
            for (Index m = 0; m < nq; ++m) {
              q.row(m) = x.row(spec.cell(g, m)).segment(off, dh);
              go.row(m) = gout.row(spec.cell(g, m)).segment(off, dh);
            }
            for (Index m = 0; m < nk; ++m) {
              k.row(m) = x.row(spec.cell(g, m)).segment(d + off, dh);
              v.row(m) = x.row(spec.cell(g, m)).segment(2 * d + off, dh);
            }
            const auto sv_h = svv.segment(off, dh);
            const auto sk_h = skv.segment(off, dh);
            MatrixR<Scalar> dp = go * v.transpose();
            VectorX<Scalar> dp0 = go * sv_h.transpose();
            if (need_sv) dsv.segment(off, dh) += go.transpose() * sd.p0;
            VectorX<Scalar> rowdot = dp.cwiseProduct(sd.p).rowwise().sum() + dp0.cwiseProduct(sd.p0);
            MatrixR<Scalar> ds = sd.p.cwiseProduct(dp - rowdot.replicate(1, nk));
            VectorX<Scalar> ds0 = sd.p0.cwiseProduct(dp0 - rowdot);
            if (need_sk) dsk.segment(off, dh) += (q.transpose() * ds0) * scl;
            if (need_x) {
              auto dx = dx_local.mat();
              MatrixR<Scalar> dq = (ds * k) * scl;
              dq += (ds0 * sk_h) * scl;
              MatrixR<Scalar> dk = (ds.transpose() * q) * scl;
              MatrixR<Scalar> dv = sd.p.transpose() * go;
              for (Index m = 0; m < nq; ++m) dx.row(spec.cell(g, m)).segment(off, dh) += dq.row(m);
              for (Index m = 0; m < nk; ++m) {
                dx.row(spec.cell(g, m)).segment(d + off, dh) += dk.row(m);
                dx.row(spec.cell(g, m)).segment(2 * d + off, dh) += dv.row(m);
              }
            }
          }
        }
        if (need_x) t.grad_buffer(iq).data() += dx_local.data();
        if (need_sk) t.grad_buffer(isk).data() += dsk;
        if (need_sv) t.grad_buffer(isv).data() += dsv;
      });
}

}  // namespace pfn
