#include "pfn/model/params.hpp"

#include <cmath>

#include "pfn/model/encode.hpp"

namespace pfn {

std::vector<ParamSpec> parameter_layout(const ModelConfig& cfg) {
  cfg.validate();
  const Index d = cfg.embed_dim, h = cfg.mlp_hidden;
  const double resid = 1.0 / std::sqrt(2.0 * cfg.n_layers);
  auto fan = [](Index in) { return 1.0 / std::sqrt(static_cast<double>(in)); };
  std::vector<ParamSpec> out;
  out.push_back({"embed.w", {kCellInputs, d}, 1.0});
  auto norm = [&](const std::string& p) {
    out.push_back({p + ".ln.g", {d}, -1.0});
    out.push_back({p + ".ln.b", {d}, 0.0});
  };
  for (int l = 0; l < cfg.n_layers; ++l) {
    const std::string layer = "layers." + std::to_string(l);
    for (const char* axis : {".row", ".col"}) {
      const std::string p = layer + axis;
      norm(p);
      out.push_back({p + ".qkv.w", {d, 3 * d}, fan(d)});
      out.push_back({p + ".qkv.b", {3 * d}, 0.0});
      out.push_back({p + ".sink_k", {d}, 1.0});
      out.push_back({p + ".sink_v", {d}, 0.1});
      out.push_back({p + ".out.w", {d, d}, fan(d) * resid});
      out.push_back({p + ".out.b", {d}, 0.0});
    }
    const std::string p = layer + ".mlp";
    norm(p);
    out.push_back({p + ".fc1.w", {d, h}, fan(d)});
    out.push_back({p + ".fc1.b", {h}, 0.0});
    out.push_back({p + ".fc2.w", {h, d}, fan(h) * resid});
    out.push_back({p + ".fc2.b", {d}, 0.0});
  }
  norm("head");
  out.push_back({"head.fc1.w", {d, h}, fan(d)});
  out.push_back({"head.fc1.b", {h}, 0.0});
  out.push_back({"head.fc2.w", {h, cfg.n_bins}, 0.1 * fan(h)});
  out.push_back({"head.fc2.b", {cfg.n_bins}, 0.0});
  return out;
}

Index parameter_count(const ModelConfig& cfg) {
  Index n = 0;
  for (const auto& spec : parameter_layout(cfg)) n += shape_size(spec.shape);
  return n;
}

}  // namespace pfn
