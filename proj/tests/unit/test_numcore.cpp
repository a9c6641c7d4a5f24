#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "../support/finite_diff.hpp"
#include "pfn/numcore/attention.hpp"
#include "pfn/numcore/ops.hpp"

namespace pfn {
namespace {

using T = Tensor<double>;

T random_tensor(Shape shape, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> n(0.0, sd);
  T t(std::move(shape));
  for (Index i = 0; i < t.size(); ++i) t[i] = n(rng);
  return t;
}

MatrixR<double> naive_matmul(const T& a, const T& b) {
  MatrixR<double> c = MatrixR<double>::Zero(a.rows(), b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < b.cols(); ++j)
      for (Index k = 0; k < a.cols(); ++k) c(i, j) += a.mat()(i, k) * b.mat()(k, j);
  return c;
}

TEST(Matmul, IdentityAndProjector) {
  GradTape<double> tape;
  auto id = tape.constant(T::from_matrix(MatrixR<double>::Identity(2, 2)));
  MatrixR<double> m(2, 2);
  m << 1, 2, 3, 4;
  auto b = tape.constant(T::from_matrix(m));
  EXPECT_EQ(matmul(id, b).value().mat(), m);

  MatrixR<double> p(2, 2), q(2, 2), expect(2, 2);
  p << 1, 0, 0, 0;
  q << 5, 6, 7, 8;
  expect << 5, 6, 0, 0;
  EXPECT_EQ(matmul(tape.constant(T::from_matrix(p)), tape.constant(T::from_matrix(q))).value().mat(), expect);
}

TEST(Matmul, MatchesTripleLoopOracle) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    std::uniform_int_distribution<Index> ext(1, 16);
    const Index m = ext(rng), k = ext(rng), n = ext(rng);
    GradTape<double> tape;
    T a = random_tensor({m, k}, rng), b = random_tensor({k, n}, rng);
    auto c = matmul(tape.constant(a), tape.constant(b));
    EXPECT_LT((c.value().mat() - naive_matmul(a, b)).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(Matmul, ShapeMismatchIsDimensionError) {
  GradTape<double> tape;
  auto a = tape.constant(T({3, 4}));
  auto b = tape.constant(T({3, 2}));
  try {
    matmul(a, b);
    FAIL() << "expected dimension error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::dimension);
  }
}

TEST(Softmax, SymmetryStabilityAndDirectOracle) {
  GradTape<double> tape;
  auto u = softmax(tape.constant(T::vector({0, 0, 0})), 0);
  for (Index i = 0; i < 3; ++i) EXPECT_NEAR(u.value()[i], 1.0 / 3.0, 1e-15);

  auto big = softmax(tape.constant(T::vector({1000, 0})), 0);
  EXPECT_TRUE(big.value().all_finite());
  EXPECT_NEAR(big.value()[0], 1.0, 1e-12);
  EXPECT_NEAR(big.value()[1], 0.0, 1e-12);

  auto s = softmax(tape.constant(T::vector({1, 2, 3})), 0);
  const double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(s.value()[i], std::exp(i + 1.0) / z, 1e-7);
}

TEST(Softmax, SumsToOneAlongEitherAxis) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    GradTape<float> tape;
    Tensor<float> x({5, 7});
    std::normal_distribution<float> n(0.0f, 30.0f);
    for (Index i = 0; i < x.size(); ++i) x[i] = n(rng);
    auto x_var = tape.constant(x);
    auto rows = softmax(x_var, 1);
    auto cols = softmax(x_var, 0);
    for (Index r = 0; r < 5; ++r) EXPECT_NEAR(rows.value().mat().row(r).sum(), 1.0f, 1e-6f);
    for (Index c = 0; c < 7; ++c) EXPECT_NEAR(cols.value().mat().col(c).sum(), 1.0f, 1e-6f);
  }
}

TEST(LayerNorm, LimitsAndDirectFormula) {
  GradTape<double> tape;
  auto g = tape.constant(T::vector({1, 1}));
  auto b = tape.constant(T::vector({0, 0}));
  MatrixR<double> c(1, 2);
  c << 4, 4;
  auto zero = layer_norm(tape.constant(T::from_matrix(c)), g, b);
  EXPECT_EQ(zero.value().mat().cwiseAbs().maxCoeff(), 0.0);

  MatrixR<double> two(1, 2);
  two << 1, 3;
  auto pm = layer_norm(tape.constant(T::from_matrix(two)), g, b, 1e-12);
  EXPECT_NEAR(pm.value()[0], -1.0, 1e-9);
  EXPECT_NEAR(pm.value()[1], 1.0, 1e-9);

  std::mt19937_64 rng(3);
  T x = random_tensor({1, 9}, rng, 3.0);
  T gain = random_tensor({9}, rng), bias = random_tensor({9}, rng);
  auto y = layer_norm(tape.constant(x), tape.constant(gain), tape.constant(bias), 1e-5);
  double mu = 0, var = 0;
  for (Index i = 0; i < 9; ++i) mu += x[i] / 9.0;
  for (Index i = 0; i < 9; ++i) var += (x[i] - mu) * (x[i] - mu) / 9.0;
  for (Index i = 0; i < 9; ++i)
    EXPECT_NEAR(y.value()[i], gain[i] * (x[i] - mu) / std::sqrt(var + 1e-5) + bias[i], 1e-12);
}

TEST(Backward, SumAndQuadratic) {
  GradTape<double> tape;
  auto p = tape.leaf(T::vector({1, -2, 5}));
  tape.backward(sum(p));
  for (Index i = 0; i < 3; ++i) EXPECT_EQ(p.grad()[i], 1.0);

  GradTape<double> tape2;
  auto q = tape2.leaf(T::vector({1, -2}));
  tape2.backward(scale(sum(mul(q, q)), 0.5));
  EXPECT_EQ(q.grad()[0], 1.0);
  EXPECT_EQ(q.grad()[1], -2.0);
}

TEST(Backward, NonScalarLossIsContractError) {
  GradTape<double> tape;
  auto p = tape.leaf(T::vector({1, 2}));
  try {
    tape.backward(p);
    FAIL() << "expected contract error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::contract);
  }
}

TEST(Backward, FanOutAccumulates) {
  GradTape<double> tape;
  auto p = tape.leaf(T::vector({3}));
  // loss = p + p + p*p -> d/dp = 2 + 2p
  tape.backward(sum(add(add(p, p), mul(p, p))));
  EXPECT_EQ(p.grad()[0], 8.0);
}

// Generic check: build a scalar loss from a set of leaves, compare tape gradients
// with five-point central differences at h = 1e-3.
void expect_gradients_match(std::vector<T> params,
                            const std::function<Var<double>(GradTape<double>&, const std::vector<Var<double>>&)>& f) {
  GradTape<double> tape;
  std::vector<Var<double>> vars;
  for (auto& p : params) vars.push_back(tape.leaf(p));
  tape.backward(f(tape, vars));
  std::vector<T> analytic;
  for (auto& v : vars) analytic.push_back(v.grad());

  auto eval = [&]() {
    GradTape<double> t2;
    t2.set_recording(false);
    std::vector<Var<double>> vs;
    for (auto& p : params) vs.push_back(t2.constant(p));
    return f(t2, vs).value().item();
  };
  for (std::size_t i = 0; i < params.size(); ++i) {
    for (Index e = 0; e < params[i].size(); ++e) {
      const double num = testing::central_difference(eval, params[i][e], 1e-3);
      EXPECT_LT(testing::relative_error(analytic[i][e], num), 1e-4)
          << "param " << i << " entry " << e << " analytic " << analytic[i][e] << " numeric " << num;
    }
  }
}

TEST(GradCheck, EveryOpAgainstFiniteDifferences) {
  std::mt19937_64 rng(42);
  expect_gradients_match({random_tensor({3, 4}, rng), random_tensor({4, 2}, rng), random_tensor({3, 2}, rng)},
                         [](GradTape<double>&, const std::vector<Var<double>>& v) {
                           return sum(mul(matmul(v[0], v[1]), v[2]));
                         });
  expect_gradients_match({random_tensor({3, 4}, rng), random_tensor({4, 5}, rng), random_tensor({5}, rng),
                          random_tensor({3, 5}, rng)},
                         [](GradTape<double>&, const std::vector<Var<double>>& v) {
                           return sum(mul(gelu(linear(v[0], v[1], v[2])), v[3]));
                         });
  for (int axis = 0; axis < 2; ++axis) {
    expect_gradients_match({random_tensor({3, 4}, rng), random_tensor({3, 4}, rng)},
                           [axis](GradTape<double>&, const std::vector<Var<double>>& v) {
                             return sum(mul(softmax(v[0], axis), v[1]));
                           });
  }
  expect_gradients_match({random_tensor({4, 6}, rng, 2.0), random_tensor({6}, rng), random_tensor({6}, rng),
                          random_tensor({4, 6}, rng)},
                         [](GradTape<double>&, const std::vector<Var<double>>& v) {
                           return sum(mul(layer_norm(v[0], v[1], v[2]), v[3]));
                         });
  expect_gradients_match({random_tensor({5, 3}, rng), random_tensor({3}, rng), random_tensor({2, 3}, rng)},
                         [](GradTape<double>&, const std::vector<Var<double>>& v) {
                           const std::vector<Index> rows{4, 1};
                           return sum(mul(gather_rows(add_row(v[0], v[1]), rows), v[2]));
                         });
}

TEST(GradCheck, AxialAttentionBothAxes) {
  std::mt19937_64 rng(5);
  for (Axis axis : {Axis::row, Axis::column}) {
    AxialSpec spec{4, 3, axis, axis == Axis::row ? 3 : 2, 2};
    expect_gradients_match({random_tensor({12, 12}, rng), random_tensor({4}, rng), random_tensor({4}, rng),
                            random_tensor({12, 4}, rng)},
                           [spec](GradTape<double>&, const std::vector<Var<double>>& v) {
                             return sum(mul(axial_attention(v[0], v[1], v[2], spec), v[3]));
                           });
  }
}

TEST(AxialAttention, MaskedKeysHaveNoInfluence) {
  std::mt19937_64 rng(9);
  T qkv = random_tensor({12, 12}, rng);
  T sk = random_tensor({4}, rng), sv = random_tensor({4}, rng);
  AxialSpec spec{4, 3, Axis::column, 2, 2};
  GradTape<double> tape;
  auto base = axial_attention(tape.constant(qkv), tape.constant(sk), tape.constant(sv), spec).value();
  // Perturb K and V of grid rows 2 and 3 (outside the key prefix).
  for (Index r = 2; r < 4; ++r)
    for (Index c = 0; c < 3; ++c) qkv.mat().row(r * 3 + c).segment(4, 8).array() += 5.0;
  auto moved = axial_attention(tape.constant(qkv), tape.constant(sk), tape.constant(sv), spec).value();
  EXPECT_EQ(base.data(), moved.data());
}

TEST(Determinism, RepeatedOpsAreBitIdentical) {
  std::mt19937_64 rng(1);
  T a = random_tensor({16, 16}, rng), b = random_tensor({16, 16}, rng);
  GradTape<double> t1, t2;
  auto x = softmax(matmul(t1.constant(a), t1.constant(b)), 1).value();
  auto y = softmax(matmul(t2.constant(a), t2.constant(b)), 1).value();
  EXPECT_EQ(x.data(), y.data());
}

TEST(CheckFinite, ReportsNonFinite) {
  Tensor<float> t({2});
  t[1] = std::numeric_limits<float>::infinity();
  EXPECT_THROW(check_finite(t, "unit"), Error);
}

}  // namespace
}  // namespace pfn

namespace pfn {
namespace {

TEST(UnrecordedForward, RowResultsIndependentOfPositionAndBatch) {
  std::mt19937_64 rng(77);
  std::normal_distribution<float> n(0.0f, 1.0f);
  for (Index width : {5, 13, 16, 23}) {
    MatrixR<float> x(11, 7), w(7, width);
    for (Index i = 0; i < x.size(); ++i) x.data()[i] = n(rng);
    for (Index i = 0; i < w.size(); ++i) w.data()[i] = n(rng);
    x.row(9) = x.row(2);
    GradTape<float> tape;
    tape.set_recording(false);
    const auto wv = tape.constant(Tensor<float>::from_matrix(w));
    const auto all = matmul(tape.constant(Tensor<float>::from_matrix(x)), wv).value().mat();
    const auto one = matmul(tape.constant(Tensor<float>::from_matrix(x.row(2))), wv).value().mat();
    EXPECT_EQ(all.row(9), all.row(2));
    EXPECT_EQ(one.row(0), all.row(2));
    const MatrixR<float> gemm = x * w;
    EXPECT_LT((gemm - all).cwiseAbs().maxCoeff(), 1e-5f);
  }
}

TEST(UnrecordedForward, AttentionMatchesRecordedPath) {
  std::mt19937_64 rng(78);
  std::normal_distribution<double> n(0.0, 1.0);
  const AxialSpec spec{5, 3, Axis::column, 3, 2};
  Tensor<double> qkv({15, 12}), sk({4}), sv({4});
  for (auto* t : {&qkv, &sk, &sv})
    for (Index i = 0; i < t->size(); ++i) (*t)[i] = n(rng);
  GradTape<double> rec, off;
  off.set_recording(false);
  const auto a = axial_attention(rec.leaf(qkv), rec.leaf(sk), rec.leaf(sv), spec).value().mat();
  const auto b = axial_attention(off.constant(qkv), off.constant(sk), off.constant(sv), spec).value().mat();
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-12);
}

}  // namespace
}  // namespace pfn
