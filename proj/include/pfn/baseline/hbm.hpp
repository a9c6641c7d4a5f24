#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pfn/geodata/records.hpp"
#include "pfn/infer/predictive.hpp"
#include "pfn/numcore/tensor.hpp"

namespace pfn {

/// log y = a + b * depth + u[borehole] + e, u ~ N(0, tau2), e ~ N(0, sigma2).
/// Priors: a ~ N(a_mean, a_sd^2), b ~ N(b_mean, b_sd^2), sigma2 ~ IG(noise_shape, noise_scale),
/// tau2 ~ IG(effect_shape, effect_scale).
struct HbmSpec {
  double a_mean = 0.0;
  double a_sd = 10.0;
  double b_mean = 0.0;
  double b_sd = 1.0;
  double noise_shape = 2.0;
  double noise_scale = 0.05;
  double effect_shape = 2.0;
  double effect_scale = 0.05;
  int burn_in = 500;
  int draws = 1000;
  int thin = 1;
  int chains = 2;
  std::uint64_t seed = 1;

  void validate() const;
};

void to_json(nlohmann::json& j, const HbmSpec& s);
void from_json(const nlohmann::json& j, HbmSpec& s);

using BoreholeKey = std::pair<std::string, std::string>;

/// Observations in model form: log target, depth, borehole index.
struct HbmData {
  Eigen::VectorXd z;
  Eigen::VectorXd depth;
  std::vector<int> group;
  std::vector<BoreholeKey> keys;

  int n_groups() const { return static_cast<int>(keys.size()); }
};

/// Records with the target observed; boreholes indexed by first appearance.
HbmData hbm_data(const SiteTable& train, Param target);

/// Posterior draws ordered by (chain, iteration).
struct HbmDraws {
  Param target = Param::su;
  std::vector<BoreholeKey> keys;
  int chains = 0;
  int per_chain = 0;
  Eigen::VectorXd a;
  Eigen::VectorXd b;
  Eigen::VectorXd noise_var;
  Eigen::VectorXd effect_var;
  /// One row per draw, one column per borehole.
  MatrixR<double> effects;
  std::uint64_t seed = 0;

  Index size() const { return a.size(); }
};

// Full conditionals, exposed for checking against closed forms.
struct NormalConditional {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};
struct InvGammaConditional {
  double shape = 0.0;
  double scale = 0.0;
};

/// Joint conditional of (a, b, u_1..u_J) given both variances; the sampler's coefficient update.
NormalConditional coefficients_conditional(const HbmSpec& s, const HbmData& d, double noise_var, double effect_var);
NormalConditional trend_conditional(const HbmSpec& s, const HbmData& d, const Eigen::VectorXd& effects, double noise_var);
/// Independent per-borehole Normals: mean and variance of each effect.
NormalConditional effects_conditional(const HbmData& d, double a, double b, double noise_var, double effect_var);
InvGammaConditional noise_conditional(const HbmSpec& s, const HbmData& d, double a, double b,
                                      const Eigen::VectorXd& effects);
InvGammaConditional effect_var_conditional(const HbmSpec& s, const Eigen::VectorXd& effects);

/// Blocked Gibbs sampler: coefficients jointly, then each variance. Data error with fewer than two boreholes or a constant target.
HbmDraws fit_hbm(const HbmSpec& spec, const SiteTable& train, Param target);
HbmDraws fit_hbm(const HbmSpec& spec, const HbmData& data, Param target);

/// Posterior-predictive summaries; boreholes unseen in the fit use the effect prior.
std::vector<Prediction> predict_hbm(const HbmDraws& draws, const std::vector<const BoreholeRecord*>& rows);

/// Split potential-scale-reduction statistic of one scalar across chains.
double potential_scale_reduction(const Eigen::VectorXd& values, int chains);

/// Largest statistic over a, b, both variances and every effect.
double max_potential_scale_reduction(const HbmDraws& draws);

/// chain,iteration,a,b,noise_var,effect_var,u[site/borehole]...
void write_draws_csv(std::ostream& os, const HbmDraws& draws);

}  // namespace pfn
