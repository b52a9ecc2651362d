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
#include <random>
#include <vector>

#include "dasr/error.h"
#include "dasr/eval/metrics.h"
#include "gtest/gtest.h"
#include "oracles.h"

namespace dasr::eval {
namespace {

using testing::PairCountingAuc;

TEST(ClassificationMetricsTest, AucMatchesPairCounting) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 60);
    std::vector<int> labels(n);
    std::vector<double> scores(n);
    for (int i = 0; i < n; ++i) {
      labels[i] = static_cast<int>(rng() % 2);
      // Coarse grid so ties are common.
      scores[i] = static_cast<double>(rng() % 11) / 10.0;
    }
    labels[0] = 0;
    labels[1] = 1;
    const double oracle = PairCountingAuc(labels, scores);
    EXPECT_NEAR(AucMannWhitney(labels, scores), oracle, 1e-9);
    EXPECT_NEAR(TrapezoidArea(RocCurve(labels, scores)), oracle, 1e-9);
    EXPECT_NEAR(ComputeClassificationMetrics(labels, scores).auc, oracle, 1e-9);
  }
}

TEST(ClassificationMetricsTest, WorkedExamples) {
  EXPECT_DOUBLE_EQ(AucMannWhitney(std::vector<int>{1, 0, 1}, std::vector<double>{0.9, 0.8, 0.3}), 0.5);

  const auto perfect = ComputeClassificationMetrics(std::vector<int>{0, 0, 1, 1}, std::vector<double>{0.1, 0.2, 0.8, 0.9});
  EXPECT_EQ(perfect.acc, 1.0);
  EXPECT_EQ(perfect.sen, 1.0);
  EXPECT_EQ(perfect.spe, 1.0);
  EXPECT_EQ(perfect.auc, 1.0);

  // 13 TP, 2 FN, 55 TN, 3 FP.
  std::vector<int> labels;
  std::vector<double> scores;
  auto add = [&](int label, double score, int count) {
    for (int i = 0; i < count; ++i) {
      labels.push_back(label);
      scores.push_back(score);
    }
  };
  add(1, 0.9, 13);
  add(1, 0.1, 2);
  add(0, 0.1, 55);
  add(0, 0.9, 3);
  const auto m = ComputeClassificationMetrics(labels, scores);
  EXPECT_EQ(m.tp, 13);
  EXPECT_EQ(m.fn, 2);
  EXPECT_EQ(m.tn, 55);
  EXPECT_EQ(m.fp, 3);
  EXPECT_NEAR(m.sen, 0.8667, 5e-5);
  EXPECT_NEAR(m.spe, 0.9483, 5e-5);
  EXPECT_NEAR(m.acc, 0.9315, 5e-5);
}

TEST(ClassificationMetricsTest, ThresholdIsStrict) {
  const auto m = ComputeClassificationMetrics(std::vector<int>{0, 1}, std::vector<double>{0.5, 0.5});
  EXPECT_EQ(m.tp, 0);
  EXPECT_EQ(m.tn, 1);
}

TEST(ClassificationMetricsTest, AccuracyIsPrevalenceWeighted) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 4 + static_cast<int>(rng() % 50);
    std::vector<int> labels(n);
    std::vector<double> scores(n);
    for (int i = 0; i < n; ++i) {
      labels[i] = u(rng) < 0.4 ? 1 : 0;
      scores[i] = u(rng);
    }
    labels[0] = 1;
    labels[1] = 0;
    const auto m = ComputeClassificationMetrics(labels, scores);
    const double prevalence = static_cast<double>(m.tp + m.fn) / n;
    EXPECT_NEAR(m.acc, prevalence * m.sen + (1.0 - prevalence) * m.spe, 1e-12);
  }
}

TEST(ClassificationMetricsTest, SingleClassLeavesOnlyAccuracy) {
  const std::vector<int> labels = {0, 0, 0};
  const std::vector<double> scores = {0.2, 0.7, 0.1};
  EXPECT_NEAR(Accuracy(labels, scores), 2.0 / 3.0, 1e-15);
  try {
    ComputeClassificationMetrics(labels, scores);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUndefinedMetric);
  }
  EXPECT_THROW(AucMannWhitney(labels, scores), Error);
}

TEST(RegressionMetricsTest, WorkedExample) {
  const auto m = ComputeRegressionMetrics(std::vector<double>{0, 1, 2}, std::vector<double>{0.5, 1, 1.5});
  EXPECT_NEAR(m.mae, 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(m.mse, 1.0 / 6.0, 1e-12);
  EXPECT_NEAR(m.r2_value(), 0.75, 1e-12);
  // Residuals (-0.5, 0, 0.5) have variance 1/6 against target variance 2/3.
  EXPECT_NEAR(m.evs_value(), 0.75, 1e-12);
}

TEST(RegressionMetricsTest, PerfectAndConstantPredictors) {
  const std::vector<double> y = {3, 7, 1, 9, 4};
  const auto perfect = ComputeRegressionMetrics(y, y);
  EXPECT_EQ(perfect.mae, 0.0);
  EXPECT_EQ(perfect.rmse, 0.0);
  EXPECT_EQ(perfect.r2_value(), 1.0);
  EXPECT_EQ(perfect.evs_value(), 1.0);
  const std::vector<double> mean(y.size(), 24.0 / 5.0);
  const auto constant = ComputeRegressionMetrics(y, mean);
  EXPECT_NEAR(constant.r2_value(), 0.0, 1e-12);
  EXPECT_NEAR(constant.evs_value(), 0.0, 1e-12);
}

TEST(RegressionMetricsTest, ZeroVarianceTargets) {
  const auto m = ComputeRegressionMetrics(std::vector<double>{2, 2, 2}, std::vector<double>{1, 2, 4});
  EXPECT_NEAR(m.mae, 1.0, 1e-15);
  EXPECT_FALSE(m.r2.has_value());
  try {
    m.r2_value();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUndefinedMetric);
  }
  EXPECT_THROW(ComputeRegressionMetrics(std::vector<double>{}, std::vector<double>{}), Error);
}

TEST(RegressionMetricsTest, RmseAndMaeRelations) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> d(0.0, 5.0);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> y(1 + rng() % 30), p(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
      y[i] = d(rng);
      p[i] = d(rng);
    }
    const auto m = ComputeRegressionMetrics(y, p);
    EXPECT_EQ(m.rmse, std::sqrt(m.mse));
    EXPECT_LE(m.mae, m.rmse * (1 + 1e-15));
    if (m.r2) {
      EXPECT_LE(*m.r2, 1.0);
      EXPECT_LE(*m.evs, 1.0);
    }
  }
}

ResampleStatistic MeanOf(const std::vector<double>& x) {
  return [&x](std::span<const int> idx) -> std::optional<double> {
    double s = 0.0;
    for (int i : idx) s += x[i];
    return s / static_cast<double>(idx.size());
  };
}

TEST(BootstrapTest, IdenticalOutcomesCollapse) {
  const std::vector<double> x(10, 0.75);
  const Interval ci = BootstrapCi(10, MeanOf(x), 500, 0.95, 1);
  EXPECT_EQ(ci.lo, 0.75);
  EXPECT_EQ(ci.hi, 0.75);
}

TEST(BootstrapTest, AccuracyIntervalWidthAtEightyEight) {
  // 81 of 88 correct, acc ~ 0.92.
  std::vector<double> correct(88, 1.0);
  for (int i = 0; i < 7; ++i) correct[i * 12] = 0.0;
  const Interval ci = BootstrapCi(88, MeanOf(correct), 2000, 0.95, 3);
  EXPECT_NEAR(ci.lo, 0.88, 0.04);
  EXPECT_NEAR(ci.hi, 0.97, 0.04);
}

TEST(BootstrapTest, DeterministicUnderSeed) {
  std::vector<double> x(30);
  std::mt19937_64 rng(2);
  for (double& v : x) v = std::normal_distribution<double>()(rng);
  const Interval a = BootstrapCi(30, MeanOf(x), 2000, 0.95, 42);
  const Interval b = BootstrapCi(30, MeanOf(x), 2000, 0.95, 42);
  EXPECT_EQ(a.lo, b.lo);
  EXPECT_EQ(a.hi, b.hi);
}

TEST(BootstrapTest, IntervalUsuallyContainsPointStatistic) {
  std::mt19937_64 rng(11);
  int contained = 0;
  const int trials = 300;
  for (int t = 0; t < trials; ++t) {
    std::vector<double> x(5 + rng() % 40);
    for (double& v : x) v = std::exponential_distribution<double>(1.0)(rng);
    const int n = static_cast<int>(x.size());
    std::vector<int> all(n);
    for (int i = 0; i < n; ++i) all[i] = i;
    const double point = *MeanOf(x)(all);
    const Interval ci = BootstrapCi(n, MeanOf(x), 400, 0.95, rng());
    contained += ci.lo <= point && point <= ci.hi;
  }
  EXPECT_GE(contained, static_cast<int>(0.99 * trials));
}

TEST(BootstrapTest, DegenerateResamplesAreRedrawnThenCapped) {
  // Undefined unless index 0 is drawn at least once.
  int calls = 0;
  const ResampleStatistic needs_zero = [&](std::span<const int> idx) -> std::optional<double> {
    ++calls;
    for (int i : idx) {
      if (i == 0) return 1.0;
    }
    return std::nullopt;
  };
  const Interval ci = BootstrapCi(3, needs_zero, 100, 0.95, 1);
  EXPECT_EQ(ci.lo, 1.0);
  EXPECT_GT(calls, 100);

  calls = 0;
  const ResampleStatistic never = [&](std::span<const int>) -> std::optional<double> {
    ++calls;
    return std::nullopt;
  };
  try {
    BootstrapCi(5, never, 50, 0.95, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUndefinedMetric);
  }
  EXPECT_EQ(calls, 500);
  EXPECT_THROW(BootstrapCi(1, never, 50, 0.95, 1), Error);
}

}  // namespace
}  // namespace dasr::eval
