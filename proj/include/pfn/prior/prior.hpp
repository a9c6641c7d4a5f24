#pragma once

#include <cstdint>
#include <random>

#include <json.hpp>

#include "pfn/prior/task.hpp"

namespace pfn {

struct IntRange {
  int lo = 0;
  int hi = 0;
};

struct RealRange {
  double lo = 0.0;
  double hi = 0.0;
};

enum class PriorFamily { scm, conjugate };

/// Relative frequency of node mechanisms in the structural causal prior.
struct MechanismMix {
  double linear = 0.3;
  double mlp = 0.45;
  double piecewise = 0.25;
};

/// Featureless Normal-Normal family: m ~ N(mu0, tau0_sq), y ~ N(m, sigma_sq).
struct ConjugateSettings {
  double mu0 = 0.0;
  double tau0_sq = 1.0;
  double sigma_sq = 1.0;
  IntRange train_rows{1, 32};
  int test_rows = 8;
};

struct PriorConfig {
  PriorFamily family = PriorFamily::scm;
  IntRange features{1, 6};
  IntRange rows{16, 160};
  IntRange latent_nodes{0, 3};
  IntRange hidden_width{4, 16};
  IntRange depth{1, 3};
  RealRange noise_scale{0.02, 0.6};
  RealRange missing_input_rate{0.0, 0.15};
  double categorical_feature_rate = 0.2;
  MechanismMix mix{};
  std::uint64_t seed = 1;
  ConjugateSettings conjugate{};

  int max_features() const { return family == PriorFamily::conjugate ? 0 : features.hi; }
  int max_rows() const {
    return family == PriorFamily::conjugate ? conjugate.train_rows.hi + conjugate.test_rows : rows.hi;
  }

  void validate() const;
};

void to_json(nlohmann::json& j, const PriorConfig& c);
void from_json(const nlohmann::json& j, PriorConfig& c);

/// Independent generator for stream `index` of a run seeded with `seed`.
std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t index);

/// Draws one task from the configured family. Deterministic in (cfg, rng state).
Task sample_task(const PriorConfig& cfg, std::mt19937_64& rng);

/// Structural-causal-model task; throws a data error if every retry is degenerate.
Task sample_scm_task(const PriorConfig& cfg, std::mt19937_64& rng);

Task sample_conjugate_task(double mu0, double tau0_sq, double sigma_sq, Index n_train, Index n_test,
                           std::mt19937_64& rng);

struct NormalPredictive {
  double mean = 0.0;
  double variance = 0.0;
};

/// Exact posterior predictive of the Normal-Normal model given observations y.
NormalPredictive conjugate_posterior_predictive(double mu0, double tau0_sq, double sigma_sq,
                                                const Eigen::VectorXd& y);

}  // namespace pfn
