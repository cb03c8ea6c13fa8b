#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <set>

#include "compsnn/error.hpp"
#include "compsnn/gradcheck.hpp"
#include "compsnn/layers.hpp"
#include "compsnn/rng.hpp"

using namespace compsnn;
using namespace compsnn::nn;

namespace {

Tensor random_tensor(std::vector<std::size_t> shape, SplitMix64& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = rng.uniform(-1, 1);
  return t;
}

// Independent central-difference gradient of sum(dy * f(v)) with respect to v.
Tensor numeric_grad(Tensor& v, const Tensor& dy, const std::function<Tensor()>& f) {
  Tensor g(v.shape());
  const double h = 1e-6;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double keep = v[i];
    auto dot = [&] {
      const Tensor y = f();
      double s = 0.0;
      for (std::size_t k = 0; k < y.size(); ++k) s += y[k] * dy[k];
      return s;
    };
    v[i] = keep + h;
    const double up = dot();
    v[i] = keep - h;
    const double down = dot();
    v[i] = keep;
    g[i] = (up - down) / (2 * h);
  }
  return g;
}

void expect_close(const Tensor& a, const Tensor& b, double tol) {
  ASSERT_EQ(a.shape(), b.shape());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_LE(std::abs(a[i] - b[i]) / std::max(1.0, std::abs(b[i])), tol) << i;
}

}  // namespace

TEST(Linear, Examples) {
  const Tensor x = Tensor::matrix(2, 2, {1, 2, 3, 4});
  EXPECT_EQ(linear_forward(x, Tensor::matrix(2, 2, {1, 0, 0, 1}), Tensor::vector({0, 0})), x);
  EXPECT_EQ(linear_forward(Tensor({3, 2}), Tensor::matrix(2, 2, {5, 6, 7, 8}), Tensor::vector({1, -1})),
            Tensor::matrix(3, 2, {1, -1, 1, -1, 1, -1}));
  EXPECT_EQ(linear_forward(Tensor::matrix(1, 2, {1, 2}), Tensor::matrix(1, 2, {3, 4}), Tensor::vector({1})),
            Tensor::matrix(1, 1, {12}));
  EXPECT_THROW(linear_forward(x, Tensor::matrix(1, 3, {1, 2, 3}), Tensor::vector({0})), Error);
}

TEST(Linear, BackwardExamples) {
  SplitMix64 rng(1);
  const Tensor x = random_tensor({3, 4}, rng);
  const Tensor w = random_tensor({2, 4}, rng);
  const auto zero = linear_backward(x, w, Tensor({3, 2}));
  for (double v : zero.dx.values()) EXPECT_EQ(v, 0.0);
  for (double v : zero.dweight.values()) EXPECT_EQ(v, 0.0);
  for (double v : zero.dbias.values()) EXPECT_EQ(v, 0.0);
  const Tensor dy = random_tensor({3, 3}, rng);
  const Tensor eye = Tensor::matrix(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  EXPECT_EQ(linear_backward(random_tensor({3, 3}, rng), eye, dy).dx, dy);
}

TEST(Linear, BackwardMatchesFiniteDifferences) {
  SplitMix64 rng(2);
  for (int trial = 0; trial < 5; ++trial) {
    Tensor x = random_tensor({3, 5}, rng), w = random_tensor({4, 5}, rng), b = random_tensor({4}, rng);
    const Tensor dy = random_tensor({3, 4}, rng);
    const auto g = linear_backward(x, w, dy);
    auto f = [&] { return linear_forward(x, w, b); };
    expect_close(g.dx, numeric_grad(x, dy, f), 1e-6);
    expect_close(g.dweight, numeric_grad(w, dy, f), 1e-6);
    expect_close(g.dbias, numeric_grad(b, dy, f), 1e-6);
  }
}

TEST(Conv1d, DeltaKernelIsIdentity) {
  SplitMix64 rng(3);
  const Tensor x = random_tensor({2, 7}, rng);
  Tensor k({2, 2, 5});
  k.at(0, 0, 2) = 1.0;
  k.at(1, 1, 2) = 1.0;
  EXPECT_EQ(conv1d_forward(x, k, Tensor({2})), x);
  const Tensor dy = random_tensor({2, 7}, rng);
  EXPECT_EQ(conv1d_backward(x, k, dy).dx, dy);
}

TEST(Conv1d, BoxFilterOnConstant) {
  const Tensor x({3, 6}, 1.0);
  const Tensor k({1, 3, 3}, 1.0);
  const Tensor y = conv1d_forward(x, k, Tensor::vector({0.5}));
  for (std::size_t t = 1; t < 5; ++t) EXPECT_EQ(y.at(0, t), 9.5);
  EXPECT_EQ(y.at(0, 0), 6.5);
  EXPECT_EQ(y.at(0, 5), 6.5);
}

TEST(Conv1d, EdgeResponseWithZeroPadding) {
  // y_t = x_{t-1} - x_{t+1}, with x_{-1} = x_4 = 0
  const Tensor x({1, 4}, std::vector<double>{1, 4, 9, 16});
  const Tensor k({1, 1, 3}, std::vector<double>{1, 0, -1});
  EXPECT_EQ(conv1d_forward(x, k, Tensor({1})), Tensor({1, 4}, std::vector<double>{-4, -8, -12, 9}));
}

TEST(Conv1d, Errors) {
  try {
    conv1d_forward(Tensor({1, 4}), Tensor({1, 1, 2}), Tensor({1}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EvenKernel);
  }
  try {
    conv1d_forward(Tensor({2, 4}), Tensor({1, 1, 3}), Tensor({1}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ShapeMismatch);
  }
}

TEST(Conv1d, BackwardMatchesFiniteDifferences) {
  SplitMix64 rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    Tensor x = random_tensor({2, 5}, rng), k = random_tensor({3, 2, 3}, rng), b = random_tensor({3}, rng);
    const Tensor dy = random_tensor({3, 5}, rng);
    const auto g = conv1d_backward(x, k, dy);
    auto f = [&] { return conv1d_forward(x, k, b); };
    expect_close(g.dx, numeric_grad(x, dy, f), 1e-6);
    expect_close(g.dkernel, numeric_grad(k, dy, f), 1e-6);
    expect_close(g.dbias, numeric_grad(b, dy, f), 1e-6);
    EXPECT_EQ(conv1d_backward(x, k, Tensor({3, 5})).dkernel, Tensor({3, 2, 3}));
  }
}

TEST(Activations, Examples) {
  EXPECT_EQ(relu_forward(Tensor::vector({-1, 0, 2})), Tensor::vector({0, 0, 2}));
  EXPECT_EQ(sigmoid(0.0), 0.5);
  EXPECT_EQ(tanh_backward(tanh_forward(Tensor::vector({0})), Tensor::vector({1})), Tensor::vector({1}));
  // Stable branches stay finite and in range at extreme inputs.
  EXPECT_EQ(sigmoid(-1000.0), 0.0);
  EXPECT_EQ(sigmoid(1000.0), 1.0);
  EXPECT_NEAR(sigmoid(-30.0), std::exp(-30.0) / (1 + std::exp(-30.0)), 1e-25);
}

TEST(Activations, BackwardMatchesFiniteDifferences) {
  SplitMix64 rng(5);
  Tensor x = random_tensor({4, 3}, rng);
  for (double& v : x.values()) v += v > 0 ? 0.1 : -0.1;  // keep away from the relu kink
  const Tensor dy = random_tensor({4, 3}, rng);
  expect_close(relu_backward(x, dy), numeric_grad(x, dy, [&] { return relu_forward(x); }), 1e-6);
  expect_close(sigmoid_backward(sigmoid_forward(x), dy), numeric_grad(x, dy, [&] { return sigmoid_forward(x); }),
               1e-6);
  expect_close(tanh_backward(tanh_forward(x), dy), numeric_grad(x, dy, [&] { return tanh_forward(x); }), 1e-6);
}

TEST(Sgd, Examples) {
  ParamSet p;
  p.add("w", Tensor::vector({1.0, -3.0}));
  sgd_step(p, 0.1);
  EXPECT_EQ(p.get("w").value, Tensor::vector({1.0, -3.0}));
  p.get("w").grad = Tensor::vector({2.0, 0.0});
  sgd_step(p, 0.1);
  EXPECT_DOUBLE_EQ(p.get("w").value[0], 0.8);
  EXPECT_EQ(p.get("w").grad, Tensor::vector({0.0, 0.0}));
}

TEST(Sgd, DeterministicAndGuardsNonFinite) {
  SplitMix64 rng(6);
  ParamSet a;
  a.add("w", random_tensor({3, 3}, rng));
  a.get("w").grad = random_tensor({3, 3}, rng);
  ParamSet b = a;
  sgd_step(a, 0.3);
  sgd_step(b, 0.3);
  EXPECT_TRUE(a == b);
  const Tensor before = a.get("w").value;
  a.get("w").grad[4] = std::nan("");
  try {
    sgd_step(a, 0.3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonFiniteGradient);
  }
  EXPECT_EQ(a.get("w").value, before);
}

TEST(Glorot, PureFunctionOfSeedAndBounded) {
  Tensor a({16, 10}), b({16, 10});
  SplitMix64 r1(9), r2(9);
  glorot_uniform(a, 10, 16, r1);
  glorot_uniform(b, 10, 16, r2);
  EXPECT_EQ(a, b);
  const double limit = std::sqrt(6.0 / 26.0);
  for (double v : a.values()) EXPECT_LE(std::abs(v), limit);
}

TEST(GradCheck, RejectsBadEpsilonAndFindsWrongGradients) {
  std::vector<double> v{0.3, -0.2};
  std::vector<double> g(2);
  auto loss = [&] { return v[0] * v[0] + 3 * v[1]; };
  auto good = [&] { g = {2 * v[0], 3.0}; };
  const std::vector<GradProbe> probes{{"v", v, g}};
  EXPECT_LT(grad_check(loss, good, probes).max_error, 1e-8);
  auto bad = [&] { g = {2 * v[0], 2.0}; };
  EXPECT_NEAR(grad_check(loss, bad, probes).max_error, 1.0 / 3.0, 1e-6);
  EXPECT_THROW(grad_check(loss, good, probes, 1e-2), Error);
}

TEST(GradCheck, FullSuitePasses) {
  const GradCheckReport report = run_gradcheck_suite();
  std::set<std::string> names;
  for (const auto& e : report.entries) {
    names.insert(e.name);
    EXPECT_LT(e.result.max_error, 1e-4) << e.name << " worst " << e.result.worst_probe;
    EXPECT_GT(e.result.coordinates, 0u) << e.name;
  }
  for (const char* n : {"linear", "conv1d", "relu", "sigmoid", "tanh", "model:compsnn", "model:single_cnn",
                        "model:single_gcnn", "model:single_mlp"}) {
    EXPECT_TRUE(names.contains(n)) << n;
  }
}
