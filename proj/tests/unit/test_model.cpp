#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <sstream>

#include "../support/finite_diff.hpp"
#include "../support/tasks.hpp"
#include "pfn/core/normal.hpp"
#include "pfn/model/checkpoint.hpp"
#include "pfn/model/network.hpp"

namespace pfn {
namespace {

ModelConfig small_config() {
  ModelConfig c;
  c.embed_dim = 16;
  c.n_layers = 2;
  c.n_heads = 2;
  c.mlp_hidden = 24;
  c.n_bins = 10;
  c.max_features = 6;
  c.max_rows = 64;
  return c;
}

MatrixR<double> logits(const ModelConfig& cfg, const ParamStore<double>& w, const Task& task,
                       const TargetScaling& s = {}) {
  GradTape<double> tape;
  tape.set_recording(false);
  const auto p = bind_parameters(tape, w, false);
  return forward(cfg, p, encode_task(task, s)).value().mat();
}

Task permute_train(const Task& t, const std::vector<Index>& perm) {
  Task out = t;
  for (Index i = 0; i < t.n_train(); ++i) {
    out.x_train.row(i) = t.x_train.row(perm[i]);
    out.missing_train.row(i) = t.missing_train.row(perm[i]);
    out.y_train[i] = t.y_train[perm[i]];
  }
  return out;
}

Task permute_features(const Task& t, const std::vector<Index>& perm) {
  Task out = t;
  for (Index c = 0; c < t.n_features(); ++c) {
    out.x_train.col(c) = t.x_train.col(perm[c]);
    out.missing_train.col(c) = t.missing_train.col(perm[c]);
    out.x_test.col(c) = t.x_test.col(perm[c]);
    out.missing_test.col(c) = t.missing_test.col(perm[c]);
  }
  return out;
}

class ModelTest : public ::testing::Test {
 protected:
  ModelConfig cfg = small_config();
  ParamStore<double> w = init_parameters<double>(cfg, 5);
  std::mt19937_64 rng{17};
};

TEST(ParamLayout, CountMatchesClosedForm) {
  const ModelConfig c = small_config();
  const Index d = c.embed_dim, h = c.mlp_hidden;
  const Index attn = 2 * d + (d * 3 * d + 3 * d) + 2 * d + (d * d + d);
  const Index mlp = 2 * d + (d * h + h) + (h * d + d);
  const Index head = 2 * d + (d * h + h) + (h * c.n_bins + c.n_bins);
  EXPECT_EQ(parameter_count(c), kCellInputs * d + c.n_layers * (2 * attn + mlp) + head);
  EXPECT_EQ(init_parameters<float>(c, 1).scalar_count(), parameter_count(c));
}

TEST(ParamLayout, InitIsDeterministicInSeed) {
  const auto c = small_config();
  EXPECT_TRUE(init_parameters<float>(c, 3) == init_parameters<float>(c, 3));
  EXPECT_FALSE(init_parameters<float>(c, 3) == init_parameters<float>(c, 4));
}

TEST_F(ModelTest, OutputShapeAndFinite) {
  const Task t = testing::random_task(rng, 12, 5, 3);
  const auto out = logits(cfg, w, t);
  EXPECT_EQ(out.rows(), 5);
  EXPECT_EQ(out.cols(), cfg.n_bins);
  EXPECT_TRUE(out.allFinite());
}

TEST_F(ModelTest, InvariantToTrainingRowOrder) {
  const Task t = testing::random_task(rng, 15, 4, 3);
  std::vector<Index> perm(15);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  EXPECT_LT((logits(cfg, w, t) - logits(cfg, w, permute_train(t, perm))).cwiseAbs().maxCoeff(), 1e-10);
}

TEST_F(ModelTest, InvariantToFeatureOrder) {
  const Task t = testing::random_task(rng, 10, 4, 4);
  const std::vector<Index> perm{2, 0, 3, 1};
  EXPECT_LT((logits(cfg, w, t) - logits(cfg, w, permute_features(t, perm))).cwiseAbs().maxCoeff(), 1e-10);
}

TEST_F(ModelTest, TestRowsAreIndependent) {
  const Task t = testing::random_task(rng, 10, 6, 2);
  const auto all = logits(cfg, w, t);
  GradTape<double> tape;
  tape.set_recording(false);
  const auto p = bind_parameters(tape, w, false);
  for (Index r = 0; r < 6; ++r) {
    const auto one = forward(cfg, p, encode_task(t, {}, r, r + 1)).value().mat();
    EXPECT_LT((one.row(0) - all.row(r)).cwiseAbs().maxCoeff(), 1e-10) << "row " << r;
  }
}

TEST_F(ModelTest, TestTargetsNeverLeak) {
  Task t = testing::random_task(rng, 10, 4, 2);
  const auto before = logits(cfg, w, t);
  t.y_test = Eigen::VectorXd::Constant(4, 1e6);
  EXPECT_EQ(before, logits(cfg, w, t));
  t.y_test.reset();
  EXPECT_EQ(before, logits(cfg, w, t));
}

TEST_F(ModelTest, CapacityAndEmptyContext) {
  auto kind_of = [&](const Task& t) {
    try {
      logits(cfg, w, t);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::contract;
  };
  EXPECT_EQ(kind_of(testing::random_task(rng, 5, 2, 7)), ErrorKind::capacity);
  EXPECT_EQ(kind_of(testing::random_task(rng, 65, 2, 2)), ErrorKind::capacity);
  EXPECT_EQ(kind_of(testing::random_task(rng, 0, 2, 2)), ErrorKind::empty_context);
  EXPECT_NO_THROW(logits(cfg, w, testing::random_task(rng, 64, 2, 6)));
}

TEST_F(ModelTest, FeaturelessTaskWorks) {
  const Task t = testing::random_task(rng, 7, 3, 0);
  const auto out = logits(cfg, w, t);
  EXPECT_EQ(out.rows(), 3);
  EXPECT_TRUE(out.allFinite());
}

TEST_F(ModelTest, FullModelGradientCheck) {
  const Task t = testing::random_task(rng, 4, 2, 2, 0.25);
  const CellGrid grid = encode_task(t, {});
  std::normal_distribution<double> n(0.0, 1.0);
  MatrixR<double> probe(2, cfg.n_bins);
  for (Index i = 0; i < probe.size(); ++i) probe.data()[i] = n(rng);

  auto run = [&](ParamStore<double>& params, GradTape<double>& tape) {
    const auto p = bind_parameters(tape, params, true);
    const auto out = forward(cfg, p, grid);
    return std::make_pair(p, sum(mul(out, tape.constant(Tensor<double>::from_matrix(probe)))));
  };
  GradTape<double> tape;
  auto [p, loss] = run(w, tape);
  tape.backward(loss);

  auto eval = [&] {
    GradTape<double> t2;
    t2.set_recording(false);
    return run(w, t2).second.value().item();
  };
  std::uniform_int_distribution<Index> pick(0, 1 << 20);
  double worst = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    for (int k = 0; k < 3; ++k) {
      const Index e = pick(rng) % w[i].size();
      const double analytic = p.vars[i].grad()[e];
      const double numeric = testing::central_difference(eval, w[i][e], 1e-3);
      const double err = testing::relative_error(analytic, numeric, 1e-6);
      worst = std::max(worst, err);
      EXPECT_LT(err, 1e-4) << w.name(i) << "[" << e << "] analytic " << analytic << " numeric " << numeric;
    }
  }
  RecordProperty("worst_rel_error", std::to_string(worst));
}

TEST(Head, UniformLogitsGiveEqualMassesAndScaling) {
  BarLayout bars{{-2, -1, 0, 1, 2}, true};
  const auto d = logits_to_distribution(Eigen::VectorXd::Zero(4), bars, {TargetScaling::Mode::fixed, 10.0, 2.0});
  for (double m : d.masses) EXPECT_NEAR(m, 0.25, 1e-12);
  EXPECT_DOUBLE_EQ(d.edges.front(), 6.0);
  EXPECT_DOUBLE_EQ(d.edges.back(), 14.0);
  EXPECT_DOUBLE_EQ(d.tail_left, 2.0);
  EXPECT_NEAR(d.mean(), 10.0, 1e-12);
  EXPECT_THROW(logits_to_distribution(Eigen::VectorXd::Zero(3), bars, {}), Error);
}

TEST(BarLayoutFit, EqualMassOnNormalSample) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> s(200000);
  for (double& v : s) v = n(rng);
  const auto bars = equal_mass_layout(s, 20);
  ASSERT_EQ(bars.n_bins(), 20);
  for (int k = 1; k < 20; ++k) {
    const double frac = std::count_if(s.begin(), s.end(), [&](double v) { return v < bars.edges[k]; }) / double(s.size());
    EXPECT_NEAR(frac, k / 20.0, 1e-3);
  }
  // Beyond the lower 5% point a of N(0,1) the median excess m satisfies
  // Phi(-(a + m)) = 0.025, and a half-Normal with scale s has median 0.6745 s.
  const double a = -normal_quantile(0.05), m = -normal_quantile(0.025) - a;
  EXPECT_NEAR(bars.tail_left(), m / -normal_quantile(0.25), 0.02);
  EXPECT_NEAR(bars.tail_left(), bars.tail_right(), 0.03);
}

TEST(BarLayoutFit, TailScaleIgnoresExtremeOutliers) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> s(100000);
  for (double& v : s) v = n(rng);
  const auto clean = equal_mass_layout(s, 20);
  for (int k = 0; k < 200; ++k) s.push_back(1e6);
  const auto dirty = equal_mass_layout(s, 20);
  EXPECT_NEAR(dirty.tail_right(), clean.tail_right(), 0.05);
  EXPECT_LT(dirty.tail_right(), 1.0);
}

TEST(BarLayoutFit, DegenerateSampleStaysStrictlyIncreasing) {
  std::vector<double> s(1000, 0.0);
  s.push_back(100.0);
  const auto bars = equal_mass_layout(s, 16);
  EXPECT_NO_THROW(bars.validate());
  EXPECT_LE(bars.edges[bars.edges.size() - 2], 4.0);
}

Checkpoint sample_checkpoint() {
  Checkpoint c;
  c.model = small_config();
  c.bars = equal_mass_layout(std::vector<double>{-3, -2, -1, -0.5, 0, 0.5, 1, 2, 3, 4, 5, 6}, c.model.n_bins);
  c.scaling = {TargetScaling::Mode::fixed, 0.5, 1.5};
  c.training = {{"tasks", 123}};
  c.weights = init_parameters<float>(c.model, 9);
  return c;
}

std::string serialize(const Checkpoint& c) {
  std::ostringstream os;
  write_checkpoint(os, c);
  return os.str();
}

ErrorKind load_error(const std::string& bytes) {
  std::istringstream is(bytes);
  try {
    read_checkpoint(is);
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::contract;
}

TEST(Checkpoint, RoundTripIsExact) {
  const auto c = sample_checkpoint();
  std::istringstream is(serialize(c));
  const auto back = read_checkpoint(is);
  EXPECT_TRUE(back.weights == c.weights);
  EXPECT_EQ(back.bars.edges, c.bars.edges);
  EXPECT_EQ(back.scaling.scale, 1.5);
  EXPECT_EQ(back.model.embed_dim, 16);
  EXPECT_EQ(back.training["tasks"], 123);
  EXPECT_EQ(serialize(back), serialize(c));
}

TEST(Checkpoint, ErrorKinds) {
  const std::string good = serialize(sample_checkpoint());
  EXPECT_EQ(load_error("GARBAGE-FILE"), ErrorKind::not_checkpoint);
  EXPECT_EQ(load_error(""), ErrorKind::not_checkpoint);

  std::string v = good;
  v[4] = 7;
  EXPECT_EQ(load_error(v), ErrorKind::version_mismatch);

  std::string h = good;
  h[16] = '#';  // first byte of the metadata JSON
  EXPECT_EQ(load_error(h), ErrorKind::corrupt_header);
  EXPECT_EQ(load_error(good.substr(0, 20)), ErrorKind::corrupt_header);

  EXPECT_EQ(load_error(good.substr(0, good.size() - 3)), ErrorKind::truncated_blob);
  EXPECT_EQ(load_error(good.substr(0, good.size() - 4 * 100)), ErrorKind::truncated_blob);
}

TEST(Checkpoint, WrongTensorCountIsCorruptHeader) {
  auto c = sample_checkpoint();
  c.weights.add("extra", Tensor<float>({2}));
  EXPECT_EQ(load_error(serialize(c)), ErrorKind::corrupt_header);
}

}  // namespace
}  // namespace pfn
