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

#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "dasr/ad/ops.h"
#include "dasr/error.h"
#include "gradcheck.h"
#include "op_cases.h"
#include "gtest/gtest.h"

namespace dasr::ad {
namespace {

using testing::GradInput;
using testing::MaxGradError;
using testing::RandomInput;
using testing::op_cases_detail::Dim;
using V = Var<double>;

TEST(LinearTest, IdentityWeightsPassInputThrough) {
  Tape<float> tape;
  std::vector<float> xv = {0.5f, -1.0f, 2.0f, 3.0f, 4.0f, -5.0f};
  auto x = tape.Constant({2, 3}, xv);
  auto w = tape.Constant({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  auto b = tape.Constant({3}, {0, 0, 0});
  auto y = Linear(x, w, b);
  EXPECT_EQ(std::vector<float>(y.value().begin(), y.value().end()), xv);
}

TEST(LinearTest, AffineArithmetic) {
  Tape<float> tape;
  auto y = Linear(tape.Constant({1, 2}, {1, 2}), tape.Constant({2, 2}, {1, 0, 0, 1}), tape.Constant({2}, {3, 4}));
  ASSERT_EQ(y.shape(), (Shape{1, 2}));
  EXPECT_EQ(y.value()[0], 4.0f);
  EXPECT_EQ(y.value()[1], 6.0f);
}

TEST(LinearTest, ShapeMismatchRaises) {
  Tape<float> tape;
  try {
    Linear(tape.Constant({1, 3}, {1, 2, 3}), tape.Constant({2, 2}, {1, 0, 0, 1}), tape.Constant({2}, {0, 0}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kShape);
  }
}

class GradCheckTest : public ::testing::TestWithParam<testing::GradCase> {};

TEST_P(GradCheckTest, MatchesCentralDifferences) {
  const testing::GradOutcome r = testing::RunGradCase(GetParam());
  EXPECT_EQ(r.failures, 0) << GetParam().name << " worst relative error " << r.worst;
}

INSTANTIATE_TEST_SUITE_P(EveryOp, GradCheckTest, ::testing::ValuesIn(testing::GradCases()),
                         [](const ::testing::TestParamInfo<testing::GradCase>& info) { return info.param.name; });

TEST(LinearTest, ThreeByFourInstanceMatchesFiniteDifferences) {
  // A fixed 3x4 input.
  std::mt19937_64 rng(99);
  std::vector<GradInput> in = {RandomInput({3, 4}, rng), RandomInput({4, 2}, rng), RandomInput({2}, rng)};
  EXPECT_LT(MaxGradError([](std::vector<V>& v) { return Linear(v[0], v[1], v[2]); }, in, rng), testing::kFeedForwardTol);
}

TEST(Conv2dTest, UnitKernelIsIdentity) {
  Tape<float> tape;
  std::vector<float> xv(2 * 3 * 4);
  std::iota(xv.begin(), xv.end(), -5.0f);
  auto x = tape.Constant({2, 3, 4}, xv);
  auto k = tape.Constant({2, 2, 1, 1}, {1, 0, 0, 1});
  auto y = Conv2d(x, k, tape.Constant({2}, {0, 0}), 1, 0);
  ASSERT_EQ(y.shape(), (Shape{2, 3, 4}));
  EXPECT_EQ(std::vector<float>(y.value().begin(), y.value().end()), xv);
}

TEST(Conv2dTest, AllOnesKernelSumsWindow) {
  Tape<float> tape;
  auto y = Conv2d(tape.Constant({1, 5, 5}, std::vector<float>(25, 1.0f)),
                  tape.Constant({1, 1, 3, 3}, std::vector<float>(9, 1.0f)), tape.Constant({1}, {0}), 1, 0);
  ASSERT_EQ(y.shape(), (Shape{1, 3, 3}));
  for (float v : y.value()) EXPECT_EQ(v, 9.0f);
}

TEST(Conv2dTest, OutputExtent) {
  Tape<float> tape;
  auto y = Conv2d(tape.Constant({1, 7, 6}, std::vector<float>(42, 0.0f)),
                  tape.Constant({3, 1, 3, 2}, std::vector<float>(18, 0.0f)), tape.Constant({3}, {0, 0, 0}), 2, 1);
  // floor((7 + 2 - 3) / 2) + 1 = 4, floor((6 + 2 - 2) / 2) + 1 = 4
  EXPECT_EQ(y.shape(), (Shape{3, 4, 4}));
  EXPECT_THROW(Conv2d(tape.Constant({2, 3, 3}, std::vector<float>(18, 0.0f)),
                      tape.Constant({1, 1, 3, 3}, std::vector<float>(9, 0.0f)), tape.Constant({1}, {0}), 1, 0),
               Error);
}

TEST(MaxPoolTest, ConstantInputGivesConstantOutput) {
  Tape<float> tape;
  auto y = MaxPool2d(tape.Constant({2, 5, 4}, std::vector<float>(40, 1.5f)));
  ASSERT_EQ(y.shape(), (Shape{2, 3, 2}));
  for (float v : y.value()) EXPECT_EQ(v, 1.5f);
}

TEST(MaxPoolTest, CeilHalvesTimeAxis) {
  Tape<float> tape;
  auto y = MaxPool2d(tape.Constant({1, 98, 6}, std::vector<float>(98 * 6, 0.0f)));
  EXPECT_EQ(y.dim(1), 49);
  auto z = MaxPool2d(y);
  EXPECT_EQ(z.dim(1), 25);
}

TEST(MaxPoolTest, OddEdgeTakesMaxOfPartialWindow) {
  Tape<float> tape;
  // 3x3 single channel; bottom-right output sees only the corner value.
  auto y = MaxPool2d(tape.Constant({1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, -9}));
  ASSERT_EQ(y.shape(), (Shape{1, 2, 2}));
  EXPECT_EQ(std::vector<float>(y.value().begin(), y.value().end()), (std::vector<float>{5, 6, 8, -9}));
}

TEST(MaxPoolTest, GradientRoutesToArgmax) {
  Tape<double> tape;
  std::vector<double> xv = {0.1, 0.9, 0.3, 0.2}, g(4, 0.0);
  auto x = tape.Leaf({1, 2, 2}, xv, g, true);
  tape.Backward(Sum(MaxPool2d(x)));
  EXPECT_EQ(g, (std::vector<double>{0, 1, 0, 0}));
}

TEST(LstmTest, ZeroWeightsGiveZeroHidden) {
  Tape<float> tape;
  const int h = 4;
  auto hc = LstmCell(tape.Constant({1, 4 * h}, std::vector<float>(4 * h, 0.0f)),
                     tape.Constant({1, h}, std::vector<float>(h, 0.0f)));
  for (int i = 0; i < 2 * h; ++i) EXPECT_EQ(hc.value()[i], 0.0f);
}

TEST(LstmTest, SaturatedForgetGateKeepsCell) {
  Tape<float> tape;
  const int h = 3;
  std::vector<float> gates(4 * h, 0.0f);
  for (int i = h; i < 2 * h; ++i) gates[i] = 100.0f;
  const std::vector<float> c_prev = {0.7f, -1.3f, 0.2f};
  auto hc = LstmCell(tape.Constant({1, 4 * h}, gates), tape.Constant({1, h}, c_prev));
  for (int i = 0; i < h; ++i) EXPECT_NEAR(hc.value()[h + i], c_prev[i], 1e-6);
}

TEST(LstmTest, CellMatchesScalarFormulas) {
  Tape<double> tape;
  const std::vector<double> g = {0.3, -0.2, 1.1, 0.4, -0.5, 0.8, 0.25, -1.0};
  const std::vector<double> c_prev = {0.6, -0.4};
  auto hc = LstmCell(tape.Constant({1, 8}, g), tape.Constant({1, 2}, c_prev));
  auto sig = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
  for (int j = 0; j < 2; ++j) {
    const double c = sig(g[2 + j]) * c_prev[j] + sig(g[j]) * std::tanh(g[4 + j]);
    EXPECT_NEAR(hc.value()[2 + j], c, 1e-12);
    EXPECT_NEAR(hc.value()[j], sig(g[6 + j]) * std::tanh(c), 1e-12);
  }
}

template <typename Real>
struct DirectionParams {
  std::vector<Real> wx, b, wh;
};

template <typename Real>
Var<Real> BiLstm(Tape<Real>& tape, Var<Real> x, const DirectionParams<Real>& fw, const DirectionParams<Real>& bw,
                 int d, int h) {
  auto dir = [&](const DirectionParams<Real>& p, bool reverse) {
    Var<Real> proj = Linear(x, tape.Constant({d, 4 * h}, p.wx), tape.Constant({4 * h}, p.b));
    return LstmSequence(proj, tape.Constant({h, 4 * h}, p.wh), reverse);
  };
  std::vector<Var<Real>> halves = {dir(fw, false), dir(bw, true)};
  return ConcatCols<Real>(halves);
}

TEST(BiLstmTest, SingleFrameHalvesShareInput) {
  Tape<double> tape;
  std::mt19937_64 rng(5);
  const int d = 3, h = 2;
  DirectionParams<double> p{RandomInput({d, 4 * h}, rng).values, RandomInput({4 * h}, rng).values,
                            RandomInput({h, 4 * h}, rng).values};
  auto x = tape.Constant({1, d}, RandomInput({1, d}, rng).values);
  auto y = BiLstm(tape, x, p, p, d, h);
  ASSERT_EQ(y.shape(), (Shape{1, 2 * h}));
  for (int j = 0; j < h; ++j) EXPECT_DOUBLE_EQ(y.value()[j], y.value()[h + j]);
}

TEST(BiLstmTest, TimeReversalSwapsHalves) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 5; ++trial) {
    const int t = Dim(rng, 1, 8), d = Dim(rng, 1, 4), h = Dim(rng, 1, 4);
    auto random_dir = [&] {
      return DirectionParams<double>{RandomInput({d, 4 * h}, rng).values, RandomInput({4 * h}, rng).values,
                                     RandomInput({h, 4 * h}, rng).values};
    };
    const DirectionParams<double> fw = random_dir(), bw = random_dir();
    const std::vector<double> xv = RandomInput({t, d}, rng).values;
    std::vector<double> xr(xv.size());
    for (int r = 0; r < t; ++r) {
      std::copy_n(xv.begin() + r * d, d, xr.begin() + (t - 1 - r) * d);
    }
    Tape<double> tape;
    auto y = BiLstm(tape, tape.Constant({t, d}, xv), fw, bw, d, h);
    auto yr = BiLstm(tape, tape.Constant({t, d}, xr), bw, fw, d, h);
    for (int r = 0; r < t; ++r) {
      for (int j = 0; j < h; ++j) {
        const int rr = t - 1 - r;
        EXPECT_NEAR(yr.value()[rr * 2 * h + j], y.value()[r * 2 * h + h + j], 1e-12);
        EXPECT_NEAR(yr.value()[rr * 2 * h + h + j], y.value()[r * 2 * h + j], 1e-12);
      }
    }
  }
}

TEST(BiLstmTest, OutputShapeAtProductionWidth) {
  Tape<float> tape;
  const int t = 2, d = 3, h = 1024;
  DirectionParams<float> p{std::vector<float>(d * 4 * h, 0.01f), std::vector<float>(4 * h, 0.0f),
                           std::vector<float>(h * 4 * h, 0.0f)};
  auto y = BiLstm(tape, tape.Constant({t, d}, std::vector<float>(t * d, 1.0f)), p, p, d, h);
  EXPECT_EQ(y.shape(), (Shape{t, 2 * h}));
}

TEST(Conv1dTest, CenteredImpulseReproducesFilter) {
  Tape<double> tape;
  auto y = Conv1dSame(tape.Constant({1, 5}, {0, 0, 1, 0, 0}), tape.Constant({1, 3}, {0.2, 0.5, 0.3}));
  ASSERT_EQ(y.shape(), (Shape{5, 1}));
  // Cross-correlation: out[u] = sum_j f[j] a[u + j - 1].
  EXPECT_EQ(std::vector<double>(y.value().begin(), y.value().end()), (std::vector<double>{0, 0.3, 0.5, 0.2, 0}));
}

TEST(SoftmaxCrossEntropyTest, UniformLogitsGiveLogV) {
  Tape<float> tape;
  const std::vector<int> targets = {3, 7};
  auto loss = SoftmaxCrossEntropy(tape.Constant({2, 10}, std::vector<float>(20, 0.25f)), std::span<const int>(targets));
  EXPECT_NEAR(loss.item(), std::log(10.0), 1e-6);
}

TEST(SoftmaxCrossEntropyTest, SaturatedCorrectLogitsGiveNearZeroLoss) {
  Tape<float> tape;
  std::vector<float> logits(2 * 5, 0.0f);
  logits[1] = 100.0f;
  logits[5 + 4] = 100.0f;
  const std::vector<int> targets = {1, 4};
  EXPECT_LT(SoftmaxCrossEntropy(tape.Constant({2, 5}, logits), std::span<const int>(targets)).item(), 1e-6);
}

TEST(SoftmaxCrossEntropyTest, OutOfRangeTargetRaisesIndexError) {
  Tape<float> tape;
  for (int bad : {-1, 5}) {
    const std::vector<int> targets = {bad};
    try {
      SoftmaxCrossEntropy(tape.Constant({1, 5}, std::vector<float>(5, 0.0f)), std::span<const int>(targets));
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kIndex);
    }
  }
}

TEST(SoftmaxCrossEntropyTest, GradientIsSoftmaxMinusOneHotOverT) {
  Tape<double> tape;
  const std::vector<double> lv = {0.5, -1.0, 2.0, 0.1, 0.1, 0.3};
  std::vector<double> g(6, 0.0);
  const std::vector<int> targets = {2, 0};
  tape.Backward(SoftmaxCrossEntropy(tape.Leaf({2, 3}, lv, g, true), std::span<const int>(targets)));
  for (int r = 0; r < 2; ++r) {
    double z = 0.0;
    for (int j = 0; j < 3; ++j) z += std::exp(lv[r * 3 + j]);
    for (int j = 0; j < 3; ++j) {
      const double expected = (std::exp(lv[r * 3 + j]) / z - (j == targets[r] ? 1.0 : 0.0)) / 2.0;
      EXPECT_NEAR(g[r * 3 + j], expected, 1e-12);
    }
  }
}

TEST(LossTest, BinaryAndSquaredErrorGradients) {
  Tape<double> tape;
  // -log(sigmoid(2)) and -log(1 - sigmoid(2)).
  EXPECT_NEAR(BceWithLogits(tape.Constant({1}, {2.0}), 1.0).item(), std::log1p(std::exp(-2.0)), 1e-12);
  EXPECT_NEAR(BceWithLogits(tape.Constant({1}, {2.0}), 0.0).item(), 2.0 + std::log1p(std::exp(-2.0)), 1e-12);
  // Large logits stay finite.
  EXPECT_NEAR(BceWithLogits(tape.Constant({1}, {800.0}), 0.0).item(), 800.0, 1e-9);
}

TEST(TapeTest, FrozenLeafReceivesNoGradient) {
  Tape<float> tape;
  std::vector<float> wv = {1.0f, 2.0f}, wg(2, 0.0f), xv = {3.0f, 4.0f}, xg(2, 0.0f);
  auto w = tape.Leaf({2}, wv, wg, false);
  auto x = tape.Leaf({2}, xv, xg, true);
  tape.Backward(Sum(Mul(w, x)));
  EXPECT_EQ(wg, (std::vector<float>{0, 0}));
  EXPECT_EQ(xg, (std::vector<float>{1, 2}));
}

TEST(TapeTest, LossIsDeterministic) {
  auto run = [] {
    std::mt19937_64 rng(31);
    std::vector<double> xv = RandomInput({4, 3}, rng).values, wv = RandomInput({3, 8}, rng).values;
    std::vector<float> xf(xv.begin(), xv.end()), wf(wv.begin(), wv.end());
    Tape<float> tape;
    auto y = LstmSequence(MatMul(tape.Constant({4, 3}, xf), tape.Constant({3, 8}, wf)),
                          tape.Constant({2, 8}, std::vector<float>(16, 0.1f)), false);
    return Sum(y).item();
  };
  EXPECT_EQ(run(), run());
}

}  // namespace
}  // namespace dasr::ad
