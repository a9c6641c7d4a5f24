#include <gtest/gtest.h>

#include "../support/random_distribution.hpp"
#include "pfn/core/normal.hpp"
#include "pfn/infer/predictive.hpp"

namespace pfn {
namespace {

PredictiveDistribution bars(std::vector<double> edges, std::vector<double> masses) {
  PredictiveDistribution d{std::move(edges), std::move(masses)};
  d.validate();
  return d;
}

TEST(Predictive, MeanOfSymmetricAndSingleBin) {
  EXPECT_DOUBLE_EQ(mean(bars({0, 1, 2}, {0.5, 0.5})), 1.0);
  EXPECT_DOUBLE_EQ(mean(bars({0, 2, 4, 6}, {0, 1, 0})), 3.0);
}

TEST(Predictive, QuantileExamples) {
  EXPECT_DOUBLE_EQ(quantile(bars({0, 10}, {1.0}), 0.5), 5.0);
  EXPECT_DOUBLE_EQ(quantile(bars({0, 1, 2}, {0.25, 0.75}), 0.25), 1.0);
}

TEST(Predictive, QuantileOutsideOpenIntervalIsRejected) {
  const auto d = bars({0, 1}, {1.0});
  EXPECT_THROW(d.quantile(0.0), Error);
  EXPECT_THROW(d.quantile(1.0), Error);
  EXPECT_THROW(d.quantile(-0.1), Error);
}

TEST(Predictive, InvalidEdgesRejected) {
  PredictiveDistribution d{{0, 1, 1}, {0.5, 0.5}};
  EXPECT_THROW(d.validate(), Error);
}

TEST(Predictive, MeanMatchesQuadrature) {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 30; ++i) {
    const auto d = testing::random_distribution(rng, i % 2 == 0);
    const double span = d.edges.back() - d.edges.front();
    EXPECT_NEAR(d.mean(), testing::quadrature_mean(d, 1'000'000), 1e-3 * span);
  }
}

TEST(Predictive, CdfQuantileRoundTrip) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 200; ++i) {
    const auto d = testing::random_distribution(rng, i % 3 != 0);
    for (double p : {0.001, 0.025, 0.3, 0.5, 0.975, 0.999}) EXPECT_NEAR(d.cdf(d.quantile(p)), p, 1e-6);
  }
}

TEST(Predictive, QuantileMonotoneAndMeanInsideExtremeQuantiles) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 100; ++i) {
    const auto d = testing::random_distribution(rng, i % 2 == 1);
    double prev = -INFINITY;
    for (int k = 1; k < 200; ++k) {
      const double q = d.quantile(k / 200.0);
      EXPECT_GE(q, prev);
      prev = q;
    }
    EXPECT_GE(d.mean(), d.quantile(0.001));
    EXPECT_LE(d.mean(), d.quantile(0.999));
  }
}

TEST(Predictive, AffineEquivariance) {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 50; ++i) {
    const auto d = testing::random_distribution(rng, true);
    const double a = 0.1 + 5.0 * (i / 50.0), b = -3.0 + i;
    const auto t = d.affine(a, b);
    EXPECT_NEAR(t.mean(), a * d.mean() + b, 1e-9 * (1 + std::abs(b)));
    for (double p : {0.025, 0.5, 0.975}) EXPECT_NEAR(t.quantile(p), a * d.quantile(p) + b, 1e-9 * (1 + std::abs(b)));
  }
}

TEST(Predictive, DensityIntegratesToOne) {
  std::mt19937_64 rng(2);
  const auto d = testing::random_distribution(rng, true);
  EXPECT_NEAR(d.cdf(1e9), 1.0, 1e-9);
  EXPECT_NEAR(d.cdf(-1e9), 0.0, 1e-9);
}

TEST(Normal, QuantileInvertsCdf) {
  for (double p : {1e-10, 1e-4, 0.01, 0.025, 0.3, 0.5, 0.8, 0.975, 0.9999}) {
    EXPECT_NEAR(normal_cdf(normal_quantile(p)), p, 1e-14 + 1e-12 * p);
  }
  EXPECT_NEAR(normal_quantile(0.975), 1.959963984540054, 1e-12);
}

TEST(Predictive, SummaryOrdersQuantiles) {
  std::mt19937_64 rng(31);
  for (int i = 0; i < 50; ++i) {
    const auto s = summarize(testing::random_distribution(rng, true));
    EXPECT_LE(s.q025, s.q500);
    EXPECT_LE(s.q500, s.q975);
    EXPECT_TRUE(std::isfinite(s.mean));
  }
}

}  // namespace
}  // namespace pfn
