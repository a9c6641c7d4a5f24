#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pfn/infer/predictive.hpp"
#include "pfn/model/encode.hpp"
#include "pfn/model/params.hpp"
#include "pfn/numcore/attention.hpp"

namespace pfn {

/// Parameters placed on a tape, addressable by name.
template <class Scalar>
struct ParamVars {
  const ParamStore<Scalar>* store = nullptr;
  std::vector<Var<Scalar>> vars;

  const Var<Scalar>& operator()(const std::string& name) const { return vars[store->index_of(name)]; }
};

template <class Scalar>
ParamVars<Scalar> bind_parameters(GradTape<Scalar>& tape, const ParamStore<Scalar>& store, bool requires_grad) {
  ParamVars<Scalar> p{&store, {}};
  p.vars.reserve(store.size());
  for (std::size_t i = 0; i < store.size(); ++i) p.vars.push_back(tape.leaf(store[i], requires_grad));
  return p;
}

/// Throws a capacity error when a grid exceeds what the configuration supports.
void check_capacity(const ModelConfig& cfg, const CellGrid& grid);

namespace detail {

template <class Scalar>
Var<Scalar> attention_block(const ParamVars<Scalar>& p, const std::string& prefix, const Var<Scalar>& h,
                            const AxialSpec& spec) {
  const auto a = layer_norm(h, p(prefix + ".ln.g"), p(prefix + ".ln.b"));
  const auto qkv = linear(a, p(prefix + ".qkv.w"), p(prefix + ".qkv.b"));
  const auto att = axial_attention(qkv, p(prefix + ".sink_k"), p(prefix + ".sink_v"), spec);
  return linear(att, p(prefix + ".out.w"), p(prefix + ".out.b"));
}

template <class Scalar>
Var<Scalar> mlp_block(const ParamVars<Scalar>& p, const std::string& prefix, const Var<Scalar>& h) {
  const auto a = layer_norm(h, p(prefix + ".ln.g"), p(prefix + ".ln.b"));
  return linear(gelu(linear(a, p(prefix + ".fc1.w"), p(prefix + ".fc1.b"))), p(prefix + ".fc2.w"), p(prefix + ".fc2.b"));
}

}  // namespace detail

/// Logits (one row per query cell, n_bins columns) for an encoded grid.
/// Rows attend within themselves; down each column every cell attends only to
/// the training rows, so test rows never influence one another.
template <class Scalar>
Var<Scalar> forward(const ModelConfig& cfg, const ParamVars<Scalar>& p, const CellGrid& grid,
                    std::uint64_t dropout_seed = 0) {
  check_capacity(cfg, grid);
  GradTape<Scalar>& tape = *p.vars.front().tape;
  const auto cells = tape.constant(Tensor<Scalar>::from_matrix(grid.cells.template cast<Scalar>()));
  auto h = matmul(cells, p("embed.w"));
  const AxialSpec row{grid.rows, grid.cols, Axis::row, grid.cols, cfg.n_heads};
  const AxialSpec col{grid.rows, grid.cols, Axis::column, grid.n_train, cfg.n_heads};
  std::uint64_t drop = dropout_seed * 0x9E3779B97F4A7C15ULL;
  auto residual = [&](const Var<Scalar>& x, const Var<Scalar>& delta) {
    return x + dropout(delta, cfg.dropout_rate, ++drop);
  };
  for (int l = 0; l < cfg.n_layers; ++l) {
    const std::string layer = "layers." + std::to_string(l);
    h = residual(h, detail::attention_block(p, layer + ".row", h, row));
    h = residual(h, detail::attention_block(p, layer + ".col", h, col));
    h = residual(h, detail::mlp_block(p, layer + ".mlp", h));
  }
  const auto q = gather_rows(h, std::span<const Index>(grid.query_cells));
  return detail::mlp_block(p, "head", q);
}

/// Predictive distribution in original target units from one row of logits.
PredictiveDistribution logits_to_distribution(const Eigen::Ref<const Eigen::VectorXd>& logits, const BarLayout& bars,
                                              const TargetScaling& scaling);

}  // namespace pfn
