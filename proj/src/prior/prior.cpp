#include "pfn/prior/prior.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pfn {

void Task::validate() const {
  const Index f = n_features();
  require(x_train.cols() == f && x_test.cols() == f, ErrorKind::contract,
          "task feature count disagrees with schema (" + std::to_string(f) + ")");
  require(x_train.rows() == y_train.size(), ErrorKind::contract, "y_train length differs from X_train rows");
  require(missing_train.rows() == x_train.rows() && missing_train.cols() == f, ErrorKind::contract,
          "train mask shape differs from X_train");
  require(missing_test.rows() == x_test.rows() && missing_test.cols() == f, ErrorKind::contract,
          "test mask shape differs from X_test");
  if (y_test) require(y_test->size() == x_test.rows(), ErrorKind::contract, "y_test length differs from X_test rows");
}

bool operator==(const Task& a, const Task& b) {
  auto same = [](const auto& x, const auto& y) {
    return x.rows() == y.rows() && x.cols() == y.cols() && (x.size() == 0 || x == y);
  };
  if (a.schema != b.schema || a.y_test.has_value() != b.y_test.has_value()) return false;
  if (a.y_test && !same(*a.y_test, *b.y_test)) return false;
  return same(a.x_train, b.x_train) && same(a.y_train, b.y_train) && same(a.x_test, b.x_test) &&
         (a.missing_train == b.missing_train).all() && (a.missing_test == b.missing_test).all() &&
         a.missing_train.rows() == b.missing_train.rows() && a.missing_test.rows() == b.missing_test.rows();
}

namespace {

void check_int_range(const IntRange& r, int min_lo, const char* name) {
  require(r.lo >= min_lo && r.lo <= r.hi, ErrorKind::config,
          std::string(name) + " range [" + std::to_string(r.lo) + ", " + std::to_string(r.hi) + "] is invalid");
}

void check_real_range(const RealRange& r, double lo, double hi, bool hi_open, const char* name) {
  const bool ok = r.lo >= lo && r.lo <= r.hi && (hi_open ? r.hi < hi : r.hi <= hi);
  require(ok, ErrorKind::config, std::string(name) + " range is invalid");
}

}  // namespace

void PriorConfig::validate() const {
  if (family == PriorFamily::conjugate) {
    require(conjugate.tau0_sq > 0 && conjugate.sigma_sq > 0, ErrorKind::config, "conjugate variances must be positive");
    check_int_range(conjugate.train_rows, 1, "conjugate train_rows");
    require(conjugate.test_rows >= 1, ErrorKind::config, "conjugate test_rows must be >= 1");
    return;
  }
  check_int_range(features, 1, "features");
  check_int_range(rows, 3, "rows");
  check_int_range(latent_nodes, 0, "latent_nodes");
  check_int_range(hidden_width, 1, "hidden_width");
  check_int_range(depth, 1, "depth");
  check_real_range(noise_scale, 0.0, 1e6, false, "noise_scale");
  check_real_range(missing_input_rate, 0.0, 1.0, true, "missing_input_rate");
  require(categorical_feature_rate >= 0.0 && categorical_feature_rate < 1.0, ErrorKind::config,
          "categorical_feature_rate must lie in [0, 1)");
  require(mix.linear >= 0 && mix.mlp >= 0 && mix.piecewise >= 0, ErrorKind::config, "mechanism weights must be >= 0");
  require(std::abs(mix.linear + mix.mlp + mix.piecewise - 1.0) <= 1e-9, ErrorKind::config,
          "mechanism weights must sum to 1");
}

void to_json(nlohmann::json& j, const PriorConfig& c) {
  auto ir = [](const IntRange& r) { return nlohmann::json::array({r.lo, r.hi}); };
  auto rr = [](const RealRange& r) { return nlohmann::json::array({r.lo, r.hi}); };
  j = nlohmann::json{
      {"family", c.family == PriorFamily::scm ? "scm" : "conjugate"},
      {"features", ir(c.features)},
      {"rows", ir(c.rows)},
      {"latent_nodes", ir(c.latent_nodes)},
      {"hidden_width", ir(c.hidden_width)},
      {"depth", ir(c.depth)},
      {"noise_scale", rr(c.noise_scale)},
      {"missing_input_rate", rr(c.missing_input_rate)},
      {"categorical_feature_rate", c.categorical_feature_rate},
      {"mechanism_mix", {{"linear", c.mix.linear}, {"mlp", c.mix.mlp}, {"piecewise", c.mix.piecewise}}},
      {"seed", c.seed},
      {"conjugate",
       {{"mu0", c.conjugate.mu0},
        {"tau0_sq", c.conjugate.tau0_sq},
        {"sigma_sq", c.conjugate.sigma_sq},
        {"train_rows", ir(c.conjugate.train_rows)},
        {"test_rows", c.conjugate.test_rows}}},
  };
}

void from_json(const nlohmann::json& j, PriorConfig& c) {
  auto ir = [](const nlohmann::json& a) { return IntRange{a.at(0).get<int>(), a.at(1).get<int>()}; };
  auto rr = [](const nlohmann::json& a) { return RealRange{a.at(0).get<double>(), a.at(1).get<double>()}; };
  c = PriorConfig{};
  if (j.contains("family")) {
    const auto f = j.at("family").get<std::string>();
    require(f == "scm" || f == "conjugate", ErrorKind::config, "unknown prior family '" + f + "'");
    c.family = f == "scm" ? PriorFamily::scm : PriorFamily::conjugate;
  }
  if (j.contains("features")) c.features = ir(j.at("features"));
  if (j.contains("rows")) c.rows = ir(j.at("rows"));
  if (j.contains("latent_nodes")) c.latent_nodes = ir(j.at("latent_nodes"));
  if (j.contains("hidden_width")) c.hidden_width = ir(j.at("hidden_width"));
  if (j.contains("depth")) c.depth = ir(j.at("depth"));
  if (j.contains("noise_scale")) c.noise_scale = rr(j.at("noise_scale"));
  if (j.contains("missing_input_rate")) c.missing_input_rate = rr(j.at("missing_input_rate"));
  if (j.contains("categorical_feature_rate")) c.categorical_feature_rate = j.at("categorical_feature_rate");
  if (j.contains("mechanism_mix")) {
    const auto& m = j.at("mechanism_mix");
    c.mix = MechanismMix{m.at("linear"), m.at("mlp"), m.at("piecewise")};
  }
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("conjugate")) {
    const auto& k = j.at("conjugate");
    c.conjugate.mu0 = k.value("mu0", c.conjugate.mu0);
    c.conjugate.tau0_sq = k.value("tau0_sq", c.conjugate.tau0_sq);
    c.conjugate.sigma_sq = k.value("sigma_sq", c.conjugate.sigma_sq);
    if (k.contains("train_rows")) c.conjugate.train_rows = ir(k.at("train_rows"));
    c.conjugate.test_rows = k.value("test_rows", c.conjugate.test_rows);
  }
  c.validate();
}

std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 finalizer over (seed, index)
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  z ^= z >> 31;
  return std::mt19937_64(z);
}

namespace {

using Rng = std::mt19937_64;

int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
double normal(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

double sample_scale(Rng& rng, const RealRange& r) {
  if (r.hi <= r.lo) return r.lo;
  if (r.lo > 0) return std::exp(uniform(rng, std::log(r.lo), std::log(r.hi)));
  return uniform(rng, r.lo, r.hi);
}

void standardize(Eigen::VectorXd& v) {
  const double mu = v.mean();
  v.array() -= mu;
  const double sd = std::sqrt(v.squaredNorm() / static_cast<double>(v.size()));
  if (sd > 1e-12) v /= sd;
}

enum class Mechanism { linear, mlp, piecewise };

Mechanism pick_mechanism(Rng& rng, const MechanismMix& mix) {
  std::discrete_distribution<int> d({mix.linear, mix.mlp, mix.piecewise});
  return static_cast<Mechanism>(d(rng));
}

Eigen::VectorXd apply_mechanism(Mechanism kind, const Eigen::MatrixXd& parents, const PriorConfig& cfg, Rng& rng) {
  const Index n = parents.rows(), k = parents.cols();
  switch (kind) {
    case Mechanism::linear: {
      Eigen::VectorXd w(k);
      for (Index i = 0; i < k; ++i) w[i] = normal(rng);
      return parents * w;
    }
    case Mechanism::mlp: {
      const int width = uniform_int(rng, cfg.hidden_width.lo, cfg.hidden_width.hi);
      Eigen::MatrixXd w1(k, width);
      Eigen::RowVectorXd b1(width);
      Eigen::VectorXd w2(width);
      const double gain = uniform(rng, 0.5, 2.5);
      for (Index i = 0; i < w1.size(); ++i) w1.data()[i] = normal(rng) * gain / std::sqrt(static_cast<double>(k));
      for (Index i = 0; i < width; ++i) b1[i] = normal(rng);
      for (Index i = 0; i < width; ++i) w2[i] = normal(rng);
      Eigen::MatrixXd h = (parents * w1).rowwise() + b1;
      return h.array().tanh().matrix() * w2;
    }
    case Mechanism::piecewise: {
      Eigen::VectorXd w(k);
      for (Index i = 0; i < k; ++i) w[i] = normal(rng);
      const Eigen::VectorXd s = parents * w;
      const int levels = uniform_int(rng, 2, 4);
      std::vector<double> sorted(s.data(), s.data() + n);
      std::sort(sorted.begin(), sorted.end());
      std::vector<double> cuts;
      for (int c = 0; c < levels - 1; ++c) {
        const auto pos = static_cast<std::size_t>(uniform(rng, 0.1, 0.9) * static_cast<double>(n - 1));
        cuts.push_back(sorted[pos]);
      }
      std::sort(cuts.begin(), cuts.end());
      std::vector<double> value(static_cast<std::size_t>(levels));
      for (auto& v : value) v = normal(rng);
      Eigen::VectorXd out(n);
      for (Index r = 0; r < n; ++r) {
        const auto lvl = static_cast<std::size_t>(std::upper_bound(cuts.begin(), cuts.end(), s[r]) - cuts.begin());
        out[r] = value[lvl];
      }
      return out;
    }
  }
  return Eigen::VectorXd::Zero(n);
}

struct Node {
  int layer = 0;
  bool categorical_root = false;
  std::vector<int> parents;
};

std::optional<Task> try_sample_scm(const PriorConfig& cfg, Rng& rng) {
  const int n_features = uniform_int(rng, cfg.features.lo, cfg.features.hi);
  const int n_latent = uniform_int(rng, cfg.latent_nodes.lo, cfg.latent_nodes.hi);
  const int n_rows = uniform_int(rng, cfg.rows.lo, cfg.rows.hi);
  const int n_nodes = n_features + 1 + n_latent;
  const int n_layers = uniform_int(rng, cfg.depth.lo, cfg.depth.hi);
  const double noise = sample_scale(rng, cfg.noise_scale);
  const double miss_rate = sample_scale(rng, cfg.missing_input_rate);

  // Layered random DAG: the first n_roots nodes are roots, the rest spread over
  // layers 1..n_layers and draw 1-3 parents from strictly earlier layers.
  const int n_roots = uniform_int(rng, 1, std::max(1, std::min(n_nodes - 1, (n_nodes + 1) / 2)));
  std::vector<Node> nodes(static_cast<std::size_t>(n_nodes));
  for (int i = n_roots; i < n_nodes; ++i) nodes[i].layer = uniform_int(rng, 1, n_layers);
  std::stable_sort(nodes.begin() + n_roots, nodes.end(), [](const Node& a, const Node& b) { return a.layer < b.layer; });
  for (int i = 0; i < n_roots; ++i) {
    nodes[i].categorical_root = uniform(rng, 0.0, 1.0) < cfg.categorical_feature_rate;
  }
  for (int i = n_roots; i < n_nodes; ++i) {
    std::vector<int> pool;
    for (int j = 0; j < i; ++j)
      if (nodes[j].layer < nodes[i].layer) pool.push_back(j);
    std::shuffle(pool.begin(), pool.end(), rng);
    const int k = uniform_int(rng, 1, std::min<int>(3, static_cast<int>(pool.size())));
    nodes[i].parents.assign(pool.begin(), pool.begin() + k);
    std::sort(nodes[i].parents.begin(), nodes[i].parents.end());
  }

  // Propagate.
  Eigen::MatrixXd value(n_rows, n_nodes);
  std::vector<Eigen::VectorXd> codes(static_cast<std::size_t>(n_nodes));
  for (int i = 0; i < n_nodes; ++i) {
    Eigen::VectorXd v(n_rows);
    if (nodes[i].parents.empty()) {
      if (nodes[i].categorical_root) {
        const int levels = uniform_int(rng, 2, 10);
        std::vector<double> effect(static_cast<std::size_t>(levels));
        for (auto& e : effect) e = normal(rng);
        Eigen::VectorXd code(n_rows);
        for (Index r = 0; r < n_rows; ++r) {
          const int c = uniform_int(rng, 0, levels - 1);
          code[r] = c;
          v[r] = effect[static_cast<std::size_t>(c)];
        }
        codes[static_cast<std::size_t>(i)] = code;
      } else if (uniform(rng, 0.0, 1.0) < 0.5) {
        for (Index r = 0; r < n_rows; ++r) v[r] = normal(rng);
      } else {
        for (Index r = 0; r < n_rows; ++r) v[r] = uniform(rng, -std::sqrt(3.0), std::sqrt(3.0));
      }
    } else {
      Eigen::MatrixXd parents(n_rows, static_cast<Index>(nodes[i].parents.size()));
      for (std::size_t p = 0; p < nodes[i].parents.size(); ++p) parents.col(static_cast<Index>(p)) = value.col(nodes[i].parents[p]);
      v = apply_mechanism(pick_mechanism(rng, cfg.mix), parents, cfg, rng);
      standardize(v);
      if (noise > 0)
        for (Index r = 0; r < n_rows; ++r) v[r] += noise * normal(rng);
    }
    value.col(i) = v;
  }

  // Target among non-root nodes when any exist; features among the remainder.
  std::vector<int> candidates;
  for (int i = 0; i < n_nodes; ++i)
    if (!nodes[i].parents.empty()) candidates.push_back(i);
  if (candidates.empty())
    for (int i = 0; i < n_nodes; ++i) candidates.push_back(i);
  const int target = candidates[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(candidates.size()) - 1))];
  std::vector<int> others;
  for (int i = 0; i < n_nodes; ++i)
    if (i != target) others.push_back(i);
  std::shuffle(others.begin(), others.end(), rng);
  others.resize(static_cast<std::size_t>(n_features));

  Eigen::VectorXd y = value.col(target);
  if (noise > 0)
    for (Index r = 0; r < n_rows; ++r) y[r] += noise * normal(rng);
  const double y_mean = y.mean();
  if (std::sqrt((y.array() - y_mean).square().mean()) <= 1e-8) return std::nullopt;

  MatrixR<double> x(n_rows, n_features);
  std::vector<FeatureKind> schema(static_cast<std::size_t>(n_features), FeatureKind::continuous);
  for (int f = 0; f < n_features; ++f) {
    const int node = others[static_cast<std::size_t>(f)];
    if (nodes[node].categorical_root) {
      // Observed as its integer code under a random relabeling.
      const auto& code = codes[static_cast<std::size_t>(node)];
      std::vector<int> perm(10);
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng);
      for (Index r = 0; r < n_rows; ++r) x(r, f) = perm[static_cast<std::size_t>(code[r])];
      schema[static_cast<std::size_t>(f)] = FeatureKind::categorical;
    } else if (nodes[node].parents.size() > 0 && uniform(rng, 0.0, 1.0) < cfg.categorical_feature_rate) {
      // Discretize a continuous node into 2-6 ordinal-free classes.
      const int levels = uniform_int(rng, 2, 6);
      std::vector<double> sorted(value.col(node).data(), value.col(node).data() + n_rows);
      std::sort(sorted.begin(), sorted.end());
      std::vector<double> cuts;
      for (int c = 1; c < levels; ++c) cuts.push_back(sorted[static_cast<std::size_t>(c * (n_rows - 1) / levels)]);
      std::vector<int> perm(static_cast<std::size_t>(levels));
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng);
      for (Index r = 0; r < n_rows; ++r) {
        const auto lvl = std::upper_bound(cuts.begin(), cuts.end(), value(r, node)) - cuts.begin();
        x(r, f) = perm[static_cast<std::size_t>(lvl)];
      }
      schema[static_cast<std::size_t>(f)] = FeatureKind::categorical;
    } else {
      x.col(f) = value.col(node);
    }
  }

  MaskR missing = MaskR::Constant(n_rows, n_features, false);
  if (miss_rate > 0) {
    std::bernoulli_distribution drop(miss_rate);
    for (Index r = 0; r < n_rows; ++r)
      for (Index f = 0; f < n_features; ++f)
        if (drop(rng)) {
          missing(r, f) = true;
          x(r, f) = 0.0;
        }
  }

  std::vector<Index> order(static_cast<std::size_t>(n_rows));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const int n_train = uniform_int(rng, 2, n_rows - 1);

  Task t;
  t.schema = std::move(schema);
  t.x_train.resize(n_train, n_features);
  t.missing_train.resize(n_train, n_features);
  t.y_train.resize(n_train);
  t.x_test.resize(n_rows - n_train, n_features);
  t.missing_test.resize(n_rows - n_train, n_features);
  Eigen::VectorXd y_test(n_rows - n_train);
  for (int i = 0; i < n_rows; ++i) {
    const Index src = order[static_cast<std::size_t>(i)];
    if (i < n_train) {
      t.x_train.row(i) = x.row(src);
      t.missing_train.row(i) = missing.row(src);
      t.y_train[i] = y[src];
    } else {
      t.x_test.row(i - n_train) = x.row(src);
      t.missing_test.row(i - n_train) = missing.row(src);
      y_test[i - n_train] = y[src];
    }
  }
  t.y_test = std::move(y_test);
  return t;
}

}  // namespace

Task sample_scm_task(const PriorConfig& cfg, std::mt19937_64& rng) {
  constexpr int kMaxRetries = 32;
  for (int attempt = 0; attempt < kMaxRetries; ++attempt) {
    if (auto t = try_sample_scm(cfg, rng)) return std::move(*t);
  }
  fail(ErrorKind::data, "prior produced a constant target " + std::to_string(kMaxRetries) + " times in a row");
}

Task sample_conjugate_task(double mu0, double tau0_sq, double sigma_sq, Index n_train, Index n_test,
                           std::mt19937_64& rng) {
  require(tau0_sq > 0 && sigma_sq > 0, ErrorKind::contract, "conjugate variances must be positive");
  require(n_train >= 1, ErrorKind::contract, "conjugate task needs n_train >= 1");
  require(n_test >= 0, ErrorKind::contract, "conjugate task needs n_test >= 0");
  std::normal_distribution<double> prior(mu0, std::sqrt(tau0_sq));
  const double m = prior(rng);
  std::normal_distribution<double> obs(m, std::sqrt(sigma_sq));
  Task t;
  t.x_train.resize(n_train, 0);
  t.missing_train.resize(n_train, 0);
  t.x_test.resize(n_test, 0);
  t.missing_test.resize(n_test, 0);
  t.y_train.resize(n_train);
  for (Index i = 0; i < n_train; ++i) t.y_train[i] = obs(rng);
  Eigen::VectorXd y_test(n_test);
  for (Index i = 0; i < n_test; ++i) y_test[i] = obs(rng);
  t.y_test = std::move(y_test);
  return t;
}

Task sample_task(const PriorConfig& cfg, std::mt19937_64& rng) {
  if (cfg.family == PriorFamily::conjugate) {
    const auto& c = cfg.conjugate;
    const int n_train = uniform_int(rng, c.train_rows.lo, c.train_rows.hi);
    return sample_conjugate_task(c.mu0, c.tau0_sq, c.sigma_sq, n_train, c.test_rows, rng);
  }
  return sample_scm_task(cfg, rng);
}

NormalPredictive conjugate_posterior_predictive(double mu0, double tau0_sq, double sigma_sq, const Eigen::VectorXd& y) {
  require(tau0_sq >= 0 && sigma_sq > 0, ErrorKind::contract, "conjugate variances must be positive");
  if (tau0_sq == 0.0) return {mu0, sigma_sq};
  const double n = static_cast<double>(y.size());
  const double precision = 1.0 / tau0_sq + n / sigma_sq;
  const double mean = (mu0 / tau0_sq + y.sum() / sigma_sq) / precision;
  return {mean, 1.0 / precision + sigma_sq};
}

}  // namespace pfn
