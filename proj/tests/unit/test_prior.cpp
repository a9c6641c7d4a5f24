#include <gtest/gtest.h>

#include <set>

#include "pfn/prior/prior.hpp"

namespace pfn {
namespace {

PriorConfig linear_noiseless() {
  PriorConfig cfg;
  cfg.features = {1, 4};
  cfg.rows = {40, 60};
  cfg.latent_nodes = {0, 0};
  cfg.noise_scale = {0.0, 0.0};
  cfg.missing_input_rate = {0.0, 0.0};
  cfg.categorical_feature_rate = 0.0;
  cfg.mix = {1.0, 0.0, 0.0};
  return cfg;
}

TEST(Prior, PureLinearNoiselessTargetIsAffineInFeatures) {
  const auto cfg = linear_noiseless();
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    auto rng = stream_rng(99, seed);
    Task t = sample_task(cfg, rng);
    if (t.n_train() <= t.n_features() + 1) continue;
    // Least-squares oracle on [X 1].
    Eigen::MatrixXd a(t.n_train(), t.n_features() + 1);
    a << t.x_train, Eigen::VectorXd::Ones(t.n_train());
    Eigen::VectorXd coef = a.completeOrthogonalDecomposition().solve(t.y_train);
    Eigen::MatrixXd at(t.n_test(), t.n_features() + 1);
    at << t.x_test, Eigen::VectorXd::Ones(t.n_test());
    EXPECT_LT((at * coef - *t.y_test).cwiseAbs().maxCoeff(), 1e-6) << "seed " << seed;
    ++checked;
  }
  EXPECT_GT(checked, 30);
}

TEST(Prior, SameSeedGivesIdenticalTask) {
  PriorConfig cfg;
  for (std::uint64_t i = 0; i < 20; ++i) {
    auto r1 = stream_rng(5, i);
    auto r2 = stream_rng(5, i);
    EXPECT_TRUE(sample_task(cfg, r1) == sample_task(cfg, r2));
  }
}

TEST(Prior, ZeroMissingRateLeavesMasksClear) {
  PriorConfig cfg;
  cfg.missing_input_rate = {0.0, 0.0};
  for (std::uint64_t i = 0; i < 50; ++i) {
    auto rng = stream_rng(3, i);
    Task t = sample_task(cfg, rng);
    EXPECT_FALSE(t.missing_train.any());
    EXPECT_FALSE(t.missing_test.any());
  }
}

TEST(Prior, TasksSatisfyInvariantsAndCoverRanges) {
  PriorConfig cfg;
  cfg.features = {1, 6};
  cfg.rows = {10, 17};
  std::set<int> features_seen, rows_seen;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    auto rng = stream_rng(17, i);
    Task t = sample_task(cfg, rng);
    EXPECT_NO_THROW(t.validate());
    EXPECT_GE(t.n_train(), 2);
    EXPECT_GE(t.n_test(), 1);
    Eigen::VectorXd all(t.n_train() + t.n_test());
    all << t.y_train, *t.y_test;
    const double sd = std::sqrt((all.array() - all.mean()).square().mean());
    EXPECT_GT(sd, 1e-8);
    features_seen.insert(static_cast<int>(t.n_features()));
    rows_seen.insert(static_cast<int>(t.n_train() + t.n_test()));
  }
  for (int f = cfg.features.lo; f <= cfg.features.hi; ++f) EXPECT_TRUE(features_seen.count(f)) << f;
  for (int r = cfg.rows.lo; r <= cfg.rows.hi; ++r) EXPECT_TRUE(rows_seen.count(r)) << r;
}

TEST(Prior, InvalidConfigRejected) {
  PriorConfig cfg;
  cfg.mix = {0.5, 0.5, 0.5};
  EXPECT_THROW(cfg.validate(), Error);
  cfg = PriorConfig{};
  cfg.missing_input_rate = {0.0, 1.0};
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(Prior, JsonRoundTrip) {
  PriorConfig cfg;
  cfg.seed = 0xFFFFFFFFFFFFFFF1ull;
  cfg.mix = {0.2, 0.5, 0.3};
  cfg.family = PriorFamily::conjugate;
  nlohmann::json j = cfg;
  PriorConfig back = j.get<PriorConfig>();
  EXPECT_EQ(nlohmann::json(back), j);
  EXPECT_EQ(back.seed, cfg.seed);
}

TEST(Conjugate, DegeneratePriorPinsTheMean) {
  Eigen::VectorXd y(3);
  y << 5, 7, 9;
  const auto p = conjugate_posterior_predictive(0.0, 1e-14, 1.0, y);
  EXPECT_NEAR(p.mean, 0.0, 1e-12);
}

TEST(Conjugate, SingleObservationUpdate) {
  // mu0=0, tau0^2=1, sigma^2=1, y=[2]: posterior N(1, 0.5), predictive N(1, 1.5).
  Eigen::VectorXd y(1);
  y << 2;
  const auto p = conjugate_posterior_predictive(0.0, 1.0, 1.0, y);
  EXPECT_NEAR(p.mean, 1.0, 1e-12);
  EXPECT_NEAR(p.variance, 1.5, 1e-12);
}

TEST(Conjugate, EmptyTrainingSetIsContractError) {
  auto rng = stream_rng(1, 1);
  try {
    sample_conjugate_task(0, 1, 1, 0, 1, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::contract);
  }
}

TEST(Conjugate, SampledTaskIsFeatureless) {
  auto rng = stream_rng(1, 2);
  Task t = sample_conjugate_task(0, 1, 1, 5, 3, rng);
  EXPECT_EQ(t.n_features(), 0);
  EXPECT_EQ(t.n_train(), 5);
  EXPECT_EQ(t.n_test(), 3);
  EXPECT_NO_THROW(t.validate());
}

}  // namespace
}  // namespace pfn
