// SPDX-FileCopyrightText: (c) 2026 erpkit contributors
//
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "erpkit/adam.hpp"
#include "erpkit/error.hpp"
#include "erpkit/gradcheck.hpp"
#include "erpkit/layers.hpp"
#include "gradient_cases.hpp"

namespace erpkit {
namespace {

using testing::random_tensor;

Tensor row(std::vector<double> v) {
  const std::size_t n = v.size();
  return Tensor({1, n}, std::move(v));
}

TEST(Conv1d, DifferenceKernel) {
  const Tensor out = conv1d_forward(row({1, 2, 3, 4}), Tensor({1, 1, 3}, {1, 0, -1}), Tensor({1}), {1, 0});
  EXPECT_EQ(out, row({-2, -2}));
}

TEST(Conv1d, UnitKernelIsIdentity) {
  std::mt19937_64 rng(1);
  const Tensor x = random_tensor({1, 9}, rng);
  EXPECT_EQ(conv1d_forward(x, Tensor({1, 1, 1}, {1.0}), Tensor({1}), {1, 0}), x);
}

TEST(Conv1d, ZeroInputGivesBias) {
  std::mt19937_64 rng(2);
  const Tensor out = conv1d_forward(Tensor({2, 7}), random_tensor({3, 2, 3}, rng), Tensor({3}, {0.5, -1, 2}), {2, 1});
  for (std::size_t o = 0; o < 3; ++o) {
    for (std::size_t t = 0; t < out.dim(1); ++t) EXPECT_EQ(out.at(o, t), (std::vector<double>{0.5, -1, 2})[o]);
  }
}

TEST(Conv1d, MatchesDirectSummation) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t k = 1 + rng() % 5, stride = 1 + rng() % 3, padding = rng() % k;
    const Tensor x = random_tensor({1 + rng() % 3, k + rng() % 10}, rng);
    const Tensor w = random_tensor({1 + rng() % 3, x.dim(0), k}, rng);
    const Tensor b = random_tensor({w.dim(0)}, rng);
    const Tensor got = conv1d_forward(x, w, b, {stride, padding});
    const Tensor want = testing::reference_conv1d(x, w, b, stride, padding);
    ASSERT_EQ(got.shape(), want.shape());
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
  }
}

TEST(Conv1d, ShapeMismatchThrows) {
  EXPECT_THROW(conv1d_forward(Tensor({2, 5}), Tensor({1, 3, 3}), Tensor({1}), {1, 0}), ShapeError);
  EXPECT_THROW(conv1d_forward(Tensor({1, 2}), Tensor({1, 1, 3}), Tensor({1}), {1, 0}), ShapeError);
}

TEST(Conv1dBackward, UnitKernelPassesUpstream) {
  std::mt19937_64 rng(4);
  const Tensor x = random_tensor({1, 6}, rng), u = random_tensor({1, 6}, rng);
  EXPECT_EQ(conv1d_backward(x, Tensor({1, 1, 1}, {1.0}), {1, 0}, u).input_grad, u);
}

TEST(Conv1dBackward, ScalarCase) {
  const LayerGrad g = conv1d_backward(Tensor({1, 1}, {3.0}), Tensor({1, 1, 1}, {2.0}), {1, 0}, Tensor({1, 1}, {5.0}));
  EXPECT_EQ(g.param("kernels")[0], 15.0);
  EXPECT_EQ(g.param("bias")[0], 5.0);
  EXPECT_EQ(g.input_grad[0], 10.0);
}

TEST(Conv1dBackward, FrozenModeLeavesParamsEmpty) {
  std::mt19937_64 rng(5);
  const LayerGrad g = conv1d_backward(random_tensor({2, 6}, rng), random_tensor({1, 2, 3}, rng), {1, 1},
                                      random_tensor({1, 6}, rng), GradMode::kInputOnly);
  EXPECT_TRUE(g.param_grads.empty());
  EXPECT_THROW(g.param("kernels"), std::out_of_range);
}

TEST(Conv1dBackward, MatchesFiniteDifferencesOn3x8) {
  std::mt19937_64 rng(6);
  const Tensor x = random_tensor({3, 8}, rng), w = random_tensor({2, 3, 3}, rng), b = random_tensor({2}, rng);
  const ConvGeometry g{1, 1};
  const Tensor u = random_tensor(conv1d_forward(x, w, b, g).shape(), rng);
  auto f = [&](std::span<const double> v) {
    return dot(conv1d_forward(Tensor(x.shape(), {v.begin(), v.end()}), w, b, g).values(), u.values());
  };
  const LayerGrad lg = conv1d_backward(x, w, g, u);
  EXPECT_LT(finite_difference_check(f, x.values(), lg.input_grad.values()).max_rel_error, 1e-5);
  auto fw = [&](std::span<const double> v) {
    return dot(conv1d_forward(x, Tensor(w.shape(), {v.begin(), v.end()}), b, g).values(), u.values());
  };
  EXPECT_LT(finite_difference_check(fw, w.values(), lg.param("kernels").values()).max_rel_error, 1e-5);
}

TEST(MaxPool, HandReadable) {
  const PoolResult r = maxpool1d_forward(row({3, 1, 4, 1}), 2, 2);
  EXPECT_EQ(r.output, row({3, 4}));
}

TEST(MaxPool, TiesGoToFirstIndex) {
  const PoolResult r = maxpool1d_forward(Tensor({1, 6}, 2.5), 3, 3);
  EXPECT_EQ(r.output, row({2.5, 2.5}));
  EXPECT_EQ(r.argmax, (std::vector<std::size_t>{0, 3}));
}

TEST(MaxPool, BackwardRoutesToArgmaxOnly) {
  const Tensor x = row({0, 5, 2, 7, 1, 3});
  const PoolResult r = maxpool1d_forward(x, 2, 2);
  const Tensor g = maxpool1d_backward(x.shape(), r, row({1, 2, 3}));
  EXPECT_EQ(g, row({0, 1, 0, 2, 0, 3}));
}

TEST(ConvTranspose1d, DirectPlacement) {
  const Tensor out = convtranspose1d_forward(row({1}), Tensor({1, 1, 3}, {1, 2, 3}), Tensor({1}), {1, 0});
  EXPECT_EQ(out, row({1, 2, 3}));
}

TEST(ConvTranspose1d, ZeroInputGivesBias) {
  std::mt19937_64 rng(7);
  const Tensor out = convtranspose1d_forward(Tensor({2, 4}), random_tensor({2, 3, 4}, rng), Tensor({3}, {1, 2, 3}),
                                             {2, 1});
  ASSERT_EQ(out.shape(), (Shape{3, convtranspose1d_output_length(4, 4, {2, 1})}));
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t t = 0; t < out.dim(1); ++t) EXPECT_EQ(out.at(c, t), static_cast<double>(c + 1));
  }
}

TEST(ConvTranspose1d, AdjointOfConv) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 200; ++i) EXPECT_LE(testing::random_adjoint_error(rng), 1e-10);
}

TEST(Dense, IdentityWeight) {
  Tensor w({3, 3});
  for (std::size_t i = 0; i < 3; ++i) w.at(i, i) = 1.0;
  const Tensor x({3}, {0.5, -2, 7});
  EXPECT_EQ(dense_forward(x, w, Tensor({3})), x);
}

TEST(Tanh, AtZero) {
  EXPECT_EQ(tanh_forward(Tensor({1}, 0.0))[0], 0.0);
  EXPECT_EQ(tanh_backward(tanh_forward(Tensor({1}, 0.0)), Tensor({1}, 1.0))[0], 1.0);
}

TEST(Backward, RandomInstancesMatchFiniteDifferences) {
  std::mt19937_64 rng(9);
  for (const auto c : testing::kAllKernelCases) {
    for (int i = 0; i < 20; ++i) EXPECT_LT(testing::random_backward_check(c, rng), 1e-6) << testing::to_string(c);
  }
}

TEST(Mse, Anchors) {
  EXPECT_EQ(mse_loss(row({1, 2}), row({1, 2})).value, 0.0);
  EXPECT_EQ(mse_loss(row({2, 3, 4}), row({1, 2, 3})).value, 1.0);
  const LossResult r = mse_loss(row({0, 2}), row({0, 0}));
  EXPECT_EQ(r.value, 2.0);
  EXPECT_EQ(r.grad, row({0, 2}));
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Tensor p({1}, 0.0);
  AdamState state(AdamConfig{}, {&p});
  adam_step({&p}, {Tensor({1}, 1.0)}, state);
  EXPECT_NEAR(p[0], -0.001, 1e-8);
}

TEST(Adam, ZeroGradientKeepsParams) {
  Tensor p({2}, {1.5, -3});
  AdamState state(AdamConfig{}, {&p});
  adam_step({&p}, {Tensor({2})}, state);
  EXPECT_EQ(p, Tensor({2}, {1.5, -3}));
}

TEST(Adam, Deterministic) {
  std::mt19937_64 rng(10);
  const Tensor start = random_tensor({4}, rng), grad = random_tensor({4}, rng);
  Tensor a = start, b = start;
  AdamState sa(AdamConfig{}, {&a}), sb(AdamConfig{}, {&b});
  for (int i = 0; i < 3; ++i) {
    adam_step({&a}, {grad}, sa);
    adam_step({&b}, {grad}, sb);
  }
  EXPECT_EQ(a, b);
}

TEST(Adam, CoupledWeightDecayActsThroughGradient) {
  Tensor p({1}, 2.0);
  AdamConfig cfg;
  cfg.weight_decay = 0.5;
  AdamState state(cfg, {&p});
  adam_step({&p}, {Tensor({1}, 0.0)}, state);
  // effective gradient 1.0 -> same first step as a unit gradient
  EXPECT_NEAR(p[0], 2.0 - 0.001, 1e-8);
}

TEST(GradCheck, LinearMapIsExact) {
  const std::vector<double> a{1.5, -2.0, 0.25};
  auto f = [&](std::span<const double> v) { return dot(a, v); };
  const std::vector<double> x{0.3, 0.1, -0.7};
  EXPECT_LE(finite_difference_check(f, x, a).max_rel_error, 1e-9);
}

TEST(GradCheck, DetectsScaledGradient) {
  std::mt19937_64 rng(11);
  const Tensor x = random_tensor({2, 8}, rng), w = random_tensor({2, 2, 3}, rng), b = random_tensor({2}, rng);
  const Tensor u = random_tensor({2, 8}, rng);
  auto f = [&](std::span<const double> v) {
    return dot(conv1d_forward(Tensor(x.shape(), {v.begin(), v.end()}), w, b, {1, 1}).values(), u.values());
  };
  Tensor g = conv1d_backward(x, w, {1, 1}, u).input_grad;
  EXPECT_LE(finite_difference_check(f, x.values(), g.values()).max_rel_error, 1e-4);
  g *= 2.0;
  EXPECT_NEAR(finite_difference_check(f, x.values(), g.values()).max_rel_error, 1.0, 1e-4);
}

}  // namespace
}  // namespace erpkit
