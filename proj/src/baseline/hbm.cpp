#include "pfn/baseline/hbm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <random>

#include "pfn/core/error.hpp"
#include "pfn/core/format.hpp"
#include "pfn/prior/prior.hpp"

namespace pfn {

void HbmSpec::validate() const {
  require(a_sd > 0.0 && b_sd > 0.0, ErrorKind::config, "trend prior scales must be positive");
  require(noise_shape > 0.0 && noise_scale > 0.0 && effect_shape > 0.0 && effect_scale > 0.0, ErrorKind::config,
          "variance prior parameters must be positive");
  require(burn_in >= 0, ErrorKind::config, "burn_in must be >= 0");
  require(draws >= 100, ErrorKind::config, "draws must be >= 100");
  require(thin >= 1, ErrorKind::config, "thin must be >= 1");
  require(chains >= 1, ErrorKind::config, "chains must be >= 1");
}

void to_json(nlohmann::json& j, const HbmSpec& s) {
  j = nlohmann::json{{"a_mean", s.a_mean},
                     {"a_sd", s.a_sd},
                     {"b_mean", s.b_mean},
                     {"b_sd", s.b_sd},
                     {"noise_shape", s.noise_shape},
                     {"noise_scale", s.noise_scale},
                     {"effect_shape", s.effect_shape},
                     {"effect_scale", s.effect_scale},
                     {"burn_in", s.burn_in},
                     {"draws", s.draws},
                     {"thin", s.thin},
                     {"chains", s.chains},
                     {"seed", s.seed}};
}

void from_json(const nlohmann::json& j, HbmSpec& s) {
  s = HbmSpec{};
  s.a_mean = j.value("a_mean", s.a_mean);
  s.a_sd = j.value("a_sd", s.a_sd);
  s.b_mean = j.value("b_mean", s.b_mean);
  s.b_sd = j.value("b_sd", s.b_sd);
  s.noise_shape = j.value("noise_shape", s.noise_shape);
  s.noise_scale = j.value("noise_scale", s.noise_scale);
  s.effect_shape = j.value("effect_shape", s.effect_shape);
  s.effect_scale = j.value("effect_scale", s.effect_scale);
  s.burn_in = j.value("burn_in", s.burn_in);
  s.draws = j.value("draws", s.draws);
  s.thin = j.value("thin", s.thin);
  s.chains = j.value("chains", s.chains);
  s.seed = j.value("seed", s.seed);
  s.validate();
}

HbmData hbm_data(const SiteTable& train, Param target) {
  HbmData d;
  std::map<BoreholeKey, int> index;
  std::vector<double> z, depth;
  for (const auto& r : train.records) {
    if (!r.has(target)) continue;
    const BoreholeKey key{r.site_id, r.borehole_id};
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, static_cast<int>(d.keys.size())).first;
      d.keys.push_back(key);
    }
    z.push_back(std::log(*r[target]));
    depth.push_back(r.depth);
    d.group.push_back(it->second);
  }
  d.z = Eigen::Map<Eigen::VectorXd>(z.data(), static_cast<Index>(z.size()));
  d.depth = Eigen::Map<Eigen::VectorXd>(depth.data(), static_cast<Index>(depth.size()));
  return d;
}

namespace {

// Precision and right-hand side of the joint coefficient conditional.
struct CoefficientSystem {
  Eigen::MatrixXd gram;  // D'D
  Eigen::VectorXd dz;    // D'z
};

CoefficientSystem coefficient_system(const HbmData& d) {
  const int p = d.n_groups() + 2;
  CoefficientSystem c{Eigen::MatrixXd::Zero(p, p), Eigen::VectorXd::Zero(p)};
  for (Index i = 0; i < d.z.size(); ++i) {
    const int g = 2 + d.group[static_cast<std::size_t>(i)];
    const double x = d.depth[i];
    c.gram(0, 0) += 1.0;
    c.gram(0, 1) += x;
    c.gram(1, 1) += x * x;
    c.gram(0, g) += 1.0;
    c.gram(1, g) += x;
    c.gram(g, g) += 1.0;
    c.dz[0] += d.z[i];
    c.dz[1] += x * d.z[i];
    c.dz[g] += d.z[i];
  }
  c.gram = c.gram.selfadjointView<Eigen::Upper>();
  return c;
}

void coefficient_precision(const HbmSpec& s, const CoefficientSystem& sys, double noise_var, double effect_var,
                           Eigen::MatrixXd& precision, Eigen::VectorXd& rhs) {
  precision = sys.gram / noise_var;
  rhs = sys.dz / noise_var;
  precision(0, 0) += 1.0 / (s.a_sd * s.a_sd);
  precision(1, 1) += 1.0 / (s.b_sd * s.b_sd);
  rhs[0] += s.a_mean / (s.a_sd * s.a_sd);
  rhs[1] += s.b_mean / (s.b_sd * s.b_sd);
  for (Index g = 2; g < precision.rows(); ++g) precision(g, g) += 1.0 / effect_var;
}

}  // namespace

NormalConditional coefficients_conditional(const HbmSpec& s, const HbmData& d, double noise_var, double effect_var) {
  Eigen::MatrixXd precision;
  Eigen::VectorXd rhs;
  coefficient_precision(s, coefficient_system(d), noise_var, effect_var, precision, rhs);
  NormalConditional c;
  c.cov = precision.inverse();
  c.mean = c.cov * rhs;
  return c;
}

NormalConditional trend_conditional(const HbmSpec& s, const HbmData& d, const Eigen::VectorXd& effects,
                                    double noise_var) {
  Eigen::Matrix2d precision = Eigen::Matrix2d::Zero();
  Eigen::Vector2d rhs(s.a_mean / (s.a_sd * s.a_sd), s.b_mean / (s.b_sd * s.b_sd));
  precision(0, 0) = 1.0 / (s.a_sd * s.a_sd);
  precision(1, 1) = 1.0 / (s.b_sd * s.b_sd);
  for (Index i = 0; i < d.z.size(); ++i) {
    const double x = d.depth[i];
    const double r = d.z[i] - effects[d.group[static_cast<std::size_t>(i)]];
    precision(0, 0) += 1.0 / noise_var;
    precision(0, 1) += x / noise_var;
    precision(1, 1) += x * x / noise_var;
    rhs[0] += r / noise_var;
    rhs[1] += x * r / noise_var;
  }
  precision(1, 0) = precision(0, 1);
  NormalConditional c;
  c.cov = precision.inverse();
  c.mean = c.cov * rhs;
  return c;
}

NormalConditional effects_conditional(const HbmData& d, double a, double b, double noise_var, double effect_var) {
  const int J = d.n_groups();
  Eigen::VectorXd count = Eigen::VectorXd::Zero(J);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(J);
  for (Index i = 0; i < d.z.size(); ++i) {
    const int g = d.group[static_cast<std::size_t>(i)];
    count[g] += 1.0;
    sum[g] += d.z[i] - a - b * d.depth[i];
  }
  NormalConditional c;
  c.mean.resize(J);
  c.cov = Eigen::MatrixXd::Zero(J, J);
  for (int g = 0; g < J; ++g) {
    const double precision = count[g] / noise_var + 1.0 / effect_var;
    c.cov(g, g) = 1.0 / precision;
    c.mean[g] = sum[g] / noise_var / precision;
  }
  return c;
}

InvGammaConditional noise_conditional(const HbmSpec& s, const HbmData& d, double a, double b,
                                      const Eigen::VectorXd& effects) {
  double ss = 0.0;
  for (Index i = 0; i < d.z.size(); ++i) {
    const double r = d.z[i] - a - b * d.depth[i] - effects[d.group[static_cast<std::size_t>(i)]];
    ss += r * r;
  }
  return {s.noise_shape + 0.5 * static_cast<double>(d.z.size()), s.noise_scale + 0.5 * ss};
}

InvGammaConditional effect_var_conditional(const HbmSpec& s, const Eigen::VectorXd& effects) {
  return {s.effect_shape + 0.5 * static_cast<double>(effects.size()), s.effect_scale + 0.5 * effects.squaredNorm()};
}

namespace {

double draw_inv_gamma(const InvGammaConditional& c, std::mt19937_64& rng) {
  std::gamma_distribution<double> g(c.shape, 1.0);
  return c.scale / g(rng);
}

}  // namespace

HbmDraws fit_hbm(const HbmSpec& spec, const SiteTable& train, Param target) {
  return fit_hbm(spec, hbm_data(train, target), target);
}

HbmDraws fit_hbm(const HbmSpec& spec, const HbmData& d, Param target) {
  spec.validate();
  require(d.n_groups() >= 2, ErrorKind::data,
          std::string("baseline needs at least two boreholes with an observed ") + name_of(target));
  const double zmean = d.z.mean();
  const double zvar = (d.z.array() - zmean).square().mean();
  require(zvar > 1e-12, ErrorKind::data, std::string("observed ") + name_of(target) + " has zero variance");

  const int J = d.n_groups();
  const Index total = static_cast<Index>(spec.chains) * spec.draws;
  HbmDraws out;
  out.target = target;
  out.keys = d.keys;
  out.chains = spec.chains;
  out.per_chain = spec.draws;
  out.seed = spec.seed;
  out.a.resize(total);
  out.b.resize(total);
  out.noise_var.resize(total);
  out.effect_var.resize(total);
  out.effects.resize(total, J);

  const auto system = coefficient_system(d);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int chain = 0; chain < spec.chains; ++chain) {
    auto rng = stream_rng(spec.seed, static_cast<std::uint64_t>(chain));
    // Overdispersed start; coefficients are drawn first so only the variances need values.
    double a = 0.0;
    double b = 0.0;
    double noise_var = zvar * std::exp(normal(rng));
    double effect_var = zvar * std::exp(normal(rng));
    Eigen::VectorXd u = Eigen::VectorXd::Zero(J);

    const int iterations = spec.burn_in + spec.draws * spec.thin;
    Index kept = static_cast<Index>(chain) * spec.draws;
    Eigen::MatrixXd precision;
    Eigen::VectorXd rhs;
    Eigen::VectorXd eps(J + 2);
    for (int it = 0; it < iterations; ++it) {
      coefficient_precision(spec, system, noise_var, effect_var, precision, rhs);
      const Eigen::LLT<Eigen::MatrixXd> llt(precision);
      const Eigen::VectorXd mean = llt.solve(rhs);
      for (Index k = 0; k < eps.size(); ++k) eps[k] = normal(rng);
      const Eigen::VectorXd theta = mean + llt.matrixU().solve(eps);
      a = theta[0];
      b = theta[1];
      u = theta.tail(J);
      noise_var = draw_inv_gamma(noise_conditional(spec, d, a, b, u), rng);
      effect_var = draw_inv_gamma(effect_var_conditional(spec, u), rng);

      const int after = it - spec.burn_in;
      if (after >= 0 && (after + 1) % spec.thin == 0) {
        out.a[kept] = a;
        out.b[kept] = b;
        out.noise_var[kept] = noise_var;
        out.effect_var[kept] = effect_var;
        out.effects.row(kept) = u.transpose();
        ++kept;
      }
    }
  }
  return out;
}

namespace {

double sorted_quantile(const std::vector<double>& sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

std::vector<Prediction> predict_hbm(const HbmDraws& draws, const std::vector<const BoreholeRecord*>& rows) {
  require(draws.size() > 0, ErrorKind::contract, "no posterior draws");
  std::map<BoreholeKey, int> index;
  for (std::size_t g = 0; g < draws.keys.size(); ++g) index.emplace(draws.keys[g], static_cast<int>(g));

  std::vector<Prediction> out;
  out.reserve(rows.size());
  std::vector<double> y(static_cast<std::size_t>(draws.size()));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& rec = *rows[r];
    auto it = index.find({rec.site_id, rec.borehole_id});
    const int g = it == index.end() ? -1 : it->second;
    auto rng = stream_rng(draws.seed ^ 0x5bd1e995ull, r);
    double sum = 0.0;
    for (Index s = 0; s < draws.size(); ++s) {
      const double effect = g >= 0 ? draws.effects(s, g) : std::sqrt(draws.effect_var[s]) * normal(rng);
      const double z = draws.a[s] + draws.b[s] * rec.depth + effect + std::sqrt(draws.noise_var[s]) * normal(rng);
      y[static_cast<std::size_t>(s)] = std::exp(z);
      sum += y[static_cast<std::size_t>(s)];
    }
    std::sort(y.begin(), y.end());
    Prediction p;
    p.mean = sum / static_cast<double>(draws.size());
    p.q025 = sorted_quantile(y, 0.025);
    p.q500 = sorted_quantile(y, 0.5);
    p.q975 = sorted_quantile(y, 0.975);
    out.push_back(p);
  }
  return out;
}

double potential_scale_reduction(const Eigen::VectorXd& values, int chains) {
  require(chains >= 1 && values.size() % chains == 0, ErrorKind::contract, "draws do not split into chains");
  const Index per = values.size() / chains;
  const Index half = per / 2;
  require(half >= 2, ErrorKind::contract, "chains too short for the diagnostic");
  const Index m = 2 * chains;
  Eigen::VectorXd means(m), vars(m);
  for (int c = 0; c < chains; ++c) {
    for (int h = 0; h < 2; ++h) {
      const auto seg = values.segment(c * per + h * half, half);
      const double mu = seg.mean();
      means[2 * c + h] = mu;
      vars[2 * c + h] = (seg.array() - mu).square().sum() / static_cast<double>(half - 1);
    }
  }
  const double grand = means.mean();
  const double B = static_cast<double>(half) * (means.array() - grand).square().sum() / static_cast<double>(m - 1);
  const double W = vars.mean();
  if (W <= 0.0) return B <= 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  const double var_plus = (static_cast<double>(half - 1) / static_cast<double>(half)) * W + B / static_cast<double>(half);
  return std::sqrt(var_plus / W);
}

double max_potential_scale_reduction(const HbmDraws& draws) {
  double worst = 0.0;
  for (const auto* v : {&draws.a, &draws.b, &draws.noise_var, &draws.effect_var})
    worst = std::max(worst, potential_scale_reduction(*v, draws.chains));
  for (Index g = 0; g < draws.effects.cols(); ++g)
    worst = std::max(worst, potential_scale_reduction(draws.effects.col(g), draws.chains));
  return worst;
}

void write_draws_csv(std::ostream& os, const HbmDraws& draws) {
  os << "chain,iteration,a,b,noise_var,effect_var";
  for (const auto& [site, hole] : draws.keys) os << ",u[" << site << '/' << hole << ']';
  os << '\n';
  for (Index s = 0; s < draws.size(); ++s) {
    os << s / draws.per_chain << ',' << s % draws.per_chain << ',' << fmt_real(draws.a[s]) << ','
       << fmt_real(draws.b[s]) << ',' << fmt_real(draws.noise_var[s]) << ',' << fmt_real(draws.effect_var[s]);
    for (Index g = 0; g < draws.effects.cols(); ++g) os << ',' << fmt_real(draws.effects(s, g));
    os << '\n';
  }
}

}  // namespace pfn
