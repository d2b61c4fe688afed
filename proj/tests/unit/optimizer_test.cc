/* Copyright 2026 The BlockBERT-cpp Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "blockbert/optimizer.h"

#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "blockbert/errors.h"

namespace blockbert {
namespace {

AdamConfig Plain(double lr) {
  AdamConfig c;
  c.peak_lr = lr;
  c.weight_decay = 0.0;
  c.clip_norm = 0.0;
  return c;
}

TEST(AdamStep, ZeroGradientsLeaveParamsUnchanged) {
  Tensor w({2, 2}, {1, -2, 3, 0.5});
  const Tensor before = w;
  const Tensor g({2, 2});
  AdamState s = MakeAdamState({&w});
  AdamStep({&w}, {&g}, s, Plain(0.1));
  EXPECT_EQ(w, before);
  EXPECT_EQ(s.step, 1u);
}

TEST(AdamStep, TwoScalarStepsByHand) {
  Tensor w({1}, {0.5});
  AdamState s = MakeAdamState({&w});
  const AdamConfig c = Plain(0.01);
  // Step 1: mhat = g and vhat = g^2, so the update is -lr g / (|g| + eps).
  const Tensor g1({1}, {0.3});
  AdamStep({&w}, {&g1}, s, c);
  const double w1 = 0.5 - 0.01 * 0.3 / (0.3 + 1e-8);
  EXPECT_NEAR(w[0], w1, 1e-15);
  EXPECT_NEAR(s.m[0][0], 0.03, 1e-15);
  EXPECT_NEAR(s.v[0][0], 0.00009, 1e-15);
  // Step 2 with g = -0.2.
  const Tensor g2({1}, {-0.2});
  AdamStep({&w}, {&g2}, s, c);
  const double m = 0.9 * 0.03 + 0.1 * -0.2;
  const double v = 0.999 * 0.00009 + 0.001 * 0.04;
  const double mhat = m / (1 - 0.81), vhat = v / (1 - 0.998001);
  EXPECT_NEAR(w[0], w1 - 0.01 * mhat / (std::sqrt(vhat) + 1e-8), 1e-15);
}

TEST(AdamStep, ClipScalesToUnitGlobalNorm) {
  // Two tensors with global norm 10; every coordinate's first update equals
  // -lr * sign for Adam regardless of scale, so inspect the moments instead.
  Tensor a({2}, {0, 0}), b({1}, {0});
  const Tensor ga({2}, {6, 0}), gb({1}, {-8});
  AdamState s = MakeAdamState({&a, &b});
  AdamConfig c = Plain(0.001);
  c.clip_norm = 1.0;
  const AdamStepInfo info = AdamStep({&a, &b}, {&ga, &gb}, s, c);
  EXPECT_DOUBLE_EQ(info.grad_norm, 10.0);
  // m = (1 - beta1) * clipped gradient.
  const double n = std::sqrt(std::pow(s.m[0][0], 2) + std::pow(s.m[0][1], 2) +
                             std::pow(s.m[1][0], 2)) /
                   0.1;
  EXPECT_NEAR(n, 1.0, 1e-12);
  EXPECT_NEAR(s.m[0][0] / 0.1, 0.6, 1e-12);
  EXPECT_NEAR(s.m[1][0] / 0.1, -0.8, 1e-12);
}

TEST(AdamStep, DecoupledDecaySkipsVectors) {
  Tensor matrix({1, 1}, {2.0}), bias({1}, {2.0});
  const Tensor g1({1, 1}), g2({1});
  AdamState s = MakeAdamState({&matrix, &bias});
  AdamConfig c = Plain(0.1);
  c.weight_decay = 0.01;
  AdamStep({&matrix, &bias}, {&g1, &g2}, s, c);
  EXPECT_NEAR(matrix[0], 2.0 - 0.1 * 0.01 * 2.0, 1e-15);
  EXPECT_EQ(bias[0], 2.0);
}

TEST(AdamStep, NonFiniteGradientIsDivergence) {
  Tensor w({2}, {1, 2});
  const Tensor g({2}, {0.1, std::numeric_limits<double>::quiet_NaN()});
  AdamState s = MakeAdamState({&w});
  EXPECT_THROW(AdamStep({&w}, {&g}, s, Plain(0.1)), DivergenceError);
  EXPECT_EQ(w, Tensor({2}, {1, 2}));
  EXPECT_EQ(s.step, 0u);
}

TEST(AdamStep, ShapeMismatch) {
  Tensor w({2});
  const Tensor g({3});
  AdamState s = MakeAdamState({&w});
  EXPECT_THROW(AdamStep({&w}, {&g}, s, Plain(0.1)), DimensionError);
}

TEST(LearningRate, WarmupThenLinearDecay) {
  AdamConfig c;
  c.peak_lr = 1.0;
  c.warmup_steps = 10;
  c.total_steps = 110;
  EXPECT_DOUBLE_EQ(LearningRate(c, 1), 0.1);
  EXPECT_DOUBLE_EQ(LearningRate(c, 10), 1.0);
  EXPECT_DOUBLE_EQ(LearningRate(c, 60), 0.5);
  EXPECT_DOUBLE_EQ(LearningRate(c, 110), 0.0);
  c.total_steps = 0;
  EXPECT_DOUBLE_EQ(LearningRate(c, 500), 1.0);
}

TEST(ProportionalWarmup, ScalesTenThousandOfTwoPointFourMillion) {
  EXPECT_EQ(ProportionalWarmup(2400000), 10000u);
  EXPECT_EQ(ProportionalWarmup(24000), 100u);
  EXPECT_EQ(ProportionalWarmup(200), 1u);
}

}  // namespace
}  // namespace blockbert
