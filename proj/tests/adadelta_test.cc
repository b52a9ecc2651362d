/*
 * Copyright 2026 The dasr Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "dasr/ad/adadelta.h"

#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "dasr/error.h"
#include "gtest/gtest.h"

namespace dasr::ad {
namespace {

ParamStore ScalarStore(float value) {
  ParamStore store;
  store.AddZeros("w", "x", {1}).value[0] = value;
  return store;
}

// Groups named after the ASR encoder/head layout.
ParamStore LayeredStore(std::mt19937_64& rng) {
  ParamStore store;
  store.AddUniform("encoder.vgg.conv1", "weight", {2, 1, 3, 3}, 0.1f, rng);
  store.AddUniform("encoder.vgg.conv1", "bias", {2}, 0.1f, rng);
  for (int layer = 1; layer <= 4; ++layer) {
    store.AddUniform("encoder.blstm.layer" + std::to_string(layer), "fw_Wx", {3, 8}, 0.1f, rng);
  }
  store.AddUniform("head.linear", "W", {4, 1}, 0.1f, rng);
  store.AddUniform("head.linear", "b", {1}, 0.1f, rng);
  return store;
}

void RandomGrads(ParamStore& store, std::mt19937_64& rng) {
  std::normal_distribution<float> d(0.0f, 1.0f);
  for (auto& g : store.groups()) {
    for (auto& t : g.tensors) {
      for (float& v : t.grad) v = d(rng);
    }
  }
}

TEST(AdaDeltaTest, ZeroGradientChangesNothing) {
  ParamStore store = ScalarStore(0.25f);
  AdaDeltaState state = MakeAdaDeltaState(store);
  AdaDeltaStep(store, state);
  EXPECT_EQ(store.group("w").tensors[0].value[0], 0.25f);
  EXPECT_EQ(state.accum_grad_sq[0][0], 0.0f);
  EXPECT_EQ(state.accum_update_sq[0][0], 0.0f);
}

TEST(AdaDeltaTest, FreshStepMatchesHandEvaluation) {
  ParamStore store = ScalarStore(0.0f);
  AdaDeltaState state = MakeAdaDeltaState(store);
  ASSERT_EQ(state.config.rho, 0.95f);
  ASSERT_EQ(state.config.eps, 1e-6f);
  store.group("w").tensors[0].grad[0] = 1.0f;
  AdaDeltaStep(store, state);
  const double expected = -std::sqrt(1e-6) / std::sqrt(0.05 + 1e-6);
  EXPECT_NEAR(store.group("w").tensors[0].value[0], expected, 1e-7);
  EXPECT_NEAR(expected, -4.4721e-3, 1e-7);
  EXPECT_NEAR(state.accum_grad_sq[0][0], 0.05, 1e-7);
  EXPECT_NEAR(state.accum_update_sq[0][0], 0.05 * expected * expected, 1e-12);
}

TEST(AdaDeltaTest, FirstStepIsScaleInvariant) {
  auto first_step = [](float g) {
    ParamStore store = ScalarStore(0.0f);
    AdaDeltaState state = MakeAdaDeltaState(store);
    store.group("w").tensors[0].grad[0] = g;
    AdaDeltaStep(store, state);
    return std::abs(static_cast<double>(store.group("w").tensors[0].value[0]));
  };
  const double ratio = first_step(1.0f) / first_step(10.0f);
  EXPECT_GE(ratio, 0.99);
  EXPECT_LE(ratio, 1.01);
}

TEST(AdaDeltaTest, FreshStepOpposesGradientSign) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<float> mag(1e-3f, 1e3f);
  std::bernoulli_distribution sign(0.5);
  for (int i = 0; i < 200; ++i) {
    const float g = sign(rng) ? mag(rng) : -mag(rng);
    const float x0 = std::uniform_real_distribution<float>(-1.0f, 1.0f)(rng);
    ParamStore store = ScalarStore(x0);
    AdaDeltaState state = MakeAdaDeltaState(store);
    store.group("w").tensors[0].grad[0] = g;
    AdaDeltaStep(store, state);
    const float moved = store.group("w").tensors[0].value[0] - x0;
    EXPECT_TRUE(g > 0 ? moved < 0 : moved > 0) << g;
  }
}

TEST(AdaDeltaTest, NonFiniteGradientAbortsStep) {
  std::mt19937_64 rng(4);
  ParamStore store = LayeredStore(rng);
  AdaDeltaState state = MakeAdaDeltaState(store);
  RandomGrads(store, rng);
  AdaDeltaStep(store, state);
  const ParamStore before = store;
  const AdaDeltaState state_before = state;
  RandomGrads(store, rng);
  store.group("head.linear").tensors[0].grad[2] = std::numeric_limits<float>::quiet_NaN();
  try {
    AdaDeltaStep(store, state);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNumeric);
  }
  for (std::size_t g = 0; g < store.groups().size(); ++g) {
    for (std::size_t t = 0; t < store.groups()[g].tensors.size(); ++t) {
      EXPECT_EQ(store.groups()[g].tensors[t].value, before.groups()[g].tensors[t].value);
    }
  }
  EXPECT_EQ(state.accum_grad_sq, state_before.accum_grad_sq);
  EXPECT_EQ(state.accum_update_sq, state_before.accum_update_sq);
  EXPECT_EQ(state.steps, state_before.steps);
}

TEST(AdaDeltaTest, NonFiniteGradientInFrozenGroupIsIgnored) {
  std::mt19937_64 rng(5);
  ParamStore store = LayeredStore(rng);
  const std::vector<std::string> trainable = {"head.linear"};
  store.SetTrainable(trainable);
  AdaDeltaState state = MakeAdaDeltaState(store);
  RandomGrads(store, rng);
  store.group("encoder.vgg.conv1").tensors[0].grad[0] = std::numeric_limits<float>::infinity();
  EXPECT_NO_THROW(AdaDeltaStep(store, state));
}

TEST(FreezeTest, LastLayerSpecSelectsExactlyNamedGroups) {
  std::mt19937_64 rng(6);
  ParamStore store = LayeredStore(rng);
  const std::vector<std::string> last = {"encoder.blstm.layer4", "head.linear"};
  store.SetTrainable(last);
  EXPECT_EQ(store.TrainableGroups(), last);
  const std::vector<std::string> with_conv = {"encoder.vgg.conv1", "encoder.blstm.layer4", "head.linear"};
  store.SetTrainable(with_conv);
  EXPECT_EQ(store.TrainableGroups(), with_conv);
}

TEST(FreezeTest, UnknownGroupIsConfigErrorAndLeavesStoreUntouched) {
  std::mt19937_64 rng(7);
  ParamStore store = LayeredStore(rng);
  const std::vector<std::string> bad = {"head.linear", "encoder.blstm.layer9"};
  try {
    store.SetTrainable(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfig);
  }
  EXPECT_EQ(store.TrainableGroups().size(), store.groups().size());
}

TEST(FreezeTest, FrozenTensorsBitIdenticalAcrossManySteps) {
  std::mt19937_64 rng(8);
  ParamStore store = LayeredStore(rng);
  const std::vector<std::string> last = {"encoder.blstm.layer4", "head.linear"};
  store.SetTrainable(last);
  const ParamStore before = store;
  AdaDeltaState state = MakeAdaDeltaState(store);
  for (int step = 0; step < 50; ++step) {
    RandomGrads(store, rng);
    ClipGradNorm(store, 5.0);
    AdaDeltaStep(store, state);
  }
  for (std::size_t g = 0; g < store.groups().size(); ++g) {
    const auto& now = store.groups()[g];
    const auto& then = before.groups()[g];
    for (std::size_t t = 0; t < now.tensors.size(); ++t) {
      if (now.trainable) {
        EXPECT_NE(now.tensors[t].value, then.tensors[t].value) << now.name;
      } else {
        EXPECT_EQ(now.tensors[t].value, then.tensors[t].value) << now.name;
      }
    }
  }
}

TEST(ClipGradNormTest, ScalesOnlyWhenAboveLimit) {
  ParamStore store;
  auto& p = store.AddZeros("g", "t", {2});
  p.grad = {3.0f, 4.0f};
  EXPECT_DOUBLE_EQ(ClipGradNorm(store, 10.0), 5.0);
  EXPECT_EQ(p.grad, (std::vector<float>{3.0f, 4.0f}));
  EXPECT_DOUBLE_EQ(ClipGradNorm(store, 1.0), 5.0);
  EXPECT_NEAR(p.grad[0], 0.6f, 1e-6);
  EXPECT_NEAR(p.grad[1], 0.8f, 1e-6);
}

}  // namespace
}  // namespace dasr::ad
