#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "pfn/model/config.hpp"
#include "pfn/numcore/tensor.hpp"

namespace pfn {

struct ParamSpec {
  std::string name;
  Shape shape;
  /// Standard deviation of the Normal initializer; negative means "constant one", zero means zeros.
  double init_sd = 0.0;
};

/// Names, shapes and initializers of every trainable tensor, in canonical order.
std::vector<ParamSpec> parameter_layout(const ModelConfig& cfg);

/// Total scalar weight count implied by a configuration.
Index parameter_count(const ModelConfig& cfg);

/// Ordered named tensors.
template <class Scalar>
class ParamStore {
 public:
  ParamStore() = default;

  void add(std::string name, Tensor<Scalar> t) {
    require(!index_.count(name), ErrorKind::contract, "duplicate parameter '" + name + "'");
    index_.emplace(name, names_.size());
    names_.push_back(std::move(name));
    tensors_.push_back(std::move(t));
  }

  std::size_t size() const { return tensors_.size(); }
  const std::string& name(std::size_t i) const { return names_[i]; }
  Tensor<Scalar>& operator[](std::size_t i) { return tensors_[i]; }
  const Tensor<Scalar>& operator[](std::size_t i) const { return tensors_[i]; }

  std::size_t index_of(const std::string& name) const {
    auto it = index_.find(name);
    require(it != index_.end(), ErrorKind::contract, "unknown parameter '" + name + "'");
    return it->second;
  }
  const Tensor<Scalar>& at(const std::string& name) const { return tensors_[index_of(name)]; }

  Index scalar_count() const {
    Index n = 0;
    for (const auto& t : tensors_) n += t.size();
    return n;
  }

  template <class Other>
  ParamStore<Other> cast() const {
    ParamStore<Other> out;
    for (std::size_t i = 0; i < size(); ++i) out.add(names_[i], tensors_[i].template cast<Other>());
    return out;
  }

  bool operator==(const ParamStore& o) const {
    if (names_ != o.names_) return false;
    for (std::size_t i = 0; i < size(); ++i) {
      if (tensors_[i].shape() != o.tensors_[i].shape() || tensors_[i].data() != o.tensors_[i].data()) return false;
    }
    return true;
  }

 private:
  std::vector<std::string> names_;
  std::vector<Tensor<Scalar>> tensors_;
  std::unordered_map<std::string, std::size_t> index_;
};

template <class Scalar>
ParamStore<Scalar> init_parameters(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  ParamStore<Scalar> store;
  for (const auto& spec : parameter_layout(cfg)) {
    Tensor<Scalar> t(spec.shape);
    for (Index i = 0; i < t.size(); ++i) {
      if (spec.init_sd < 0) t[i] = Scalar(1);
      else if (spec.init_sd > 0) t[i] = static_cast<Scalar>(spec.init_sd * normal(rng));
    }
    store.add(spec.name, std::move(t));
  }
  return store;
}

}  // namespace pfn
