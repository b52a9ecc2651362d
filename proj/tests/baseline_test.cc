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

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "dasr/baseline/linear_svm.h"
#include "dasr/error.h"
#include "dasr/eval/cv.h"
#include "gtest/gtest.h"

namespace dasr::baseline {
namespace {

audio::FeatureMatrix RandomFeatures(int frames, int dim, float offset, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> d(0.0f, 1.0f);
  audio::FeatureMatrix f;
  f.frames = Matrix(frames, dim);
  for (float& v : f.frames.data) v = d(rng) + offset;
  return f;
}

TEST(SummarizeTest, LayoutAndBruteForceMean) {
  const auto f = RandomFeatures(50, 6, 0.3f, 1);
  const auto s = Summarize(f);
  ASSERT_EQ(s.size(), static_cast<std::size_t>(SummaryLength(6)));
  for (int c = 0; c < 6; ++c) {
    double sum = 0.0;
    for (int r = 0; r < 50; ++r) sum += f.frames(r, c);
    EXPECT_NEAR(s[5 * c], sum / 50.0, 1e-9);
  }
  EXPECT_NEAR(s[30], 0.5, 1e-12);  // 50 frames at 10 ms
  EXPECT_GT(s[31], 0.0);
  EXPECT_LE(s[31], 1.0);
}

TEST(SummarizeTest, PercentilesAndSkew) {
  audio::FeatureMatrix f;
  f.frames = Matrix(11, 1);
  for (int r = 0; r < 11; ++r) f.frames(r, 0) = static_cast<float>(10 - r);
  const auto s = Summarize(f);
  EXPECT_NEAR(s[0], 5.0, 1e-12);
  EXPECT_NEAR(s[1], std::sqrt(10.0), 1e-12);
  EXPECT_NEAR(s[2], 1.0, 1e-12);
  EXPECT_NEAR(s[3], 9.0, 1e-12);
  EXPECT_NEAR(s[4], 0.0, 1e-12);

  // Right-skewed column: {0, 0, 0, 3}: mean 0.75, m2 1.6875, m3 2.53125.
  f.frames = Matrix(4, 1);
  f.frames(3, 0) = 3.0f;
  EXPECT_NEAR(Summarize(f)[4], 2.53125 / std::pow(1.6875, 1.5), 1e-12);
}

TEST(SummarizeTest, ConstantColumnsHaveZeroSpread) {
  audio::FeatureMatrix f;
  f.frames = Matrix(7, 3, 0.1f);
  const auto s = Summarize(f);
  for (int c = 0; c < 3; ++c) {
    EXPECT_EQ(s[5 * c + 1], 0.0);
    EXPECT_EQ(s[5 * c + 4], 0.0);
  }
  EXPECT_EQ(s[16], 1.0);  // every frame is as loud as the loudest
}

TEST(SummarizeTest, FrameOrderDoesNotMatter) {
  auto f = RandomFeatures(40, 9, 0.0f, 2);
  const auto a = Summarize(f);
  audio::FeatureMatrix g = f;
  std::vector<int> perm(40);
  for (int i = 0; i < 40; ++i) perm[i] = (i * 7 + 3) % 40;
  for (int r = 0; r < 40; ++r) {
    for (int c = 0; c < 9; ++c) g.frames(r, c) = f.frames(perm[r], c);
  }
  EXPECT_EQ(Summarize(g), a);
}

TEST(SummarizeTest, DuplicatedFramesKeepStatistics) {
  const auto f = RandomFeatures(30, 6, 0.0f, 3);
  audio::FeatureMatrix g;
  g.frames = Matrix(60, 6);
  for (int r = 0; r < 60; ++r) {
    for (int c = 0; c < 6; ++c) g.frames(r, c) = f.frames(r / 2, c);
  }
  const auto a = Summarize(f), b = Summarize(g);
  // Duration doubles by construction; everything else is a distribution statistic.
  const std::size_t duration = 30;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (i == duration) continue;
    // Quantile interpolation positions shift with the count, so p10/p90 move slightly.
    const bool quantile = i < duration && (i % 5 == 2 || i % 5 == 3);
    if (!quantile) {
      EXPECT_NEAR(a[i], b[i], 1e-9) << i;
    }
  }
  EXPECT_NEAR(b[duration], 2.0 * a[duration], 1e-12);
}

TEST(SummarizeTest, TooShort) {
  try {
    Summarize(RandomFeatures(1, 3, 0.0f, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTooShort);
  }
}

// Grid search with successive zooming around the best point.
double GridOptimum(const std::vector<std::vector<double>>& x, const std::vector<int>& y, double c) {
  const std::size_t d = x.front().size();
  std::vector<double> centre(d + 1, 0.0);
  double radius = 8.0, best = std::numeric_limits<double>::infinity();
  const int steps = d == 1 ? 400 : 40;
  for (int zoom = 0; zoom < 12; ++zoom) {
    std::vector<double> point(d + 1), best_point = centre;
    std::vector<int> idx(d + 1, 0);
    while (true) {
      for (std::size_t k = 0; k <= d; ++k) point[k] = centre[k] + radius * (2.0 * idx[k] / steps - 1.0);
      LinearSvm svm{std::vector<double>(point.begin(), point.begin() + d), point[d]};
      const double obj = HingeObjective(svm, x, y, c);
      if (obj < best) {
        best = obj;
        best_point = point;
      }
      std::size_t k = 0;
      while (k <= d && ++idx[k] > steps) idx[k++] = 0;
      if (k > d) break;
    }
    centre = best_point;
    radius *= 0.25;
  }
  return best;
}

TEST(LinearSvmTest, MatchesGridOptimumOnFivePoints) {
  const std::vector<std::vector<double>> x = {{-2}, {-1}, {0.5}, {1}, {3}};
  const std::vector<int> y = {0, 0, 1, 0, 1};
  for (double c : {0.1, 1.0, 10.0}) {
    const LinearSvm svm = TrainLinearSvm(x, y, {c, 200});
    const double oracle = GridOptimum(x, y, c);
    EXPECT_LE(HingeObjective(svm, x, y, c), oracle * 1.01) << c;
    EXPECT_GE(HingeObjective(svm, x, y, c), oracle * (1 - 1e-9)) << c;
  }
}

TEST(LinearSvmTest, MatchesGridOptimumOnOverlappingClasses) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> d(0.0, 1.0);
  for (int trial = 0; trial < 3; ++trial) {
    std::vector<std::vector<double>> x;
    std::vector<int> y;
    for (int i = 0; i < 24; ++i) {
      y.push_back(i % 3 == 0);
      x.push_back({d(rng) + y.back(), d(rng) - 0.5 * y.back()});
    }
    const LinearSvm svm = TrainLinearSvm(x, y, {1.0, 200});
    EXPECT_LE(HingeObjective(svm, x, y, 1.0), GridOptimum(x, y, 1.0) * 1.01) << trial;
  }
}

TEST(LinearSvmTest, SeparableToySet) {
  const std::vector<std::vector<double>> x = {{0, 0}, {2, 2}};
  const std::vector<int> y = {0, 1};
  const LinearSvm svm = TrainLinearSvm(x, y, {100.0, 200});
  EXPECT_EQ(svm.Predict(x[0]), 0);
  EXPECT_EQ(svm.Predict(x[1]), 1);
}

TEST(LinearSvmTest, LabelFlipNegatesTheModel) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<std::vector<double>> x;
  std::vector<int> y, flipped;
  for (int i = 0; i < 30; ++i) {
    y.push_back(i % 2);
    flipped.push_back(1 - y.back());
    x.push_back({d(rng) + y.back(), d(rng), d(rng) - y.back()});
  }
  const LinearSvm a = TrainLinearSvm(x, y, {});
  const LinearSvm b = TrainLinearSvm(x, flipped, {});
  for (std::size_t j = 0; j < a.w.size(); ++j) EXPECT_NEAR(a.w[j], -b.w[j], 1e-9);
  EXPECT_NEAR(std::abs(a.b), std::abs(b.b), 1e-3);
}

TEST(LinearSvmTest, ObjectiveTraceSettles) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  for (int i = 0; i < 40; ++i) {
    y.push_back(i % 4 == 0);
    std::vector<double> v(8);
    for (double& e : v) e = d(rng) + 0.7 * y.back();
    x.push_back(v);
  }
  std::vector<double> trace;
  TrainLinearSvm(x, y, {}, &trace);
  ASSERT_EQ(trace.size(), 200u);
  for (std::size_t e = 1; e < trace.size(); ++e) EXPECT_LE(trace[e], trace[e - 1] * 1.03) << e;
  EXPECT_LE(trace.back(), trace.front());
}

TEST(LinearSvmTest, TieAndErrors) {
  const LinearSvm svm{{1.0, -1.0}, 0.0};
  EXPECT_EQ(svm.Predict(std::vector<double>{0.5, 0.5}), 0);
  EXPECT_EQ(svm.Predict(std::vector<double>{0.6, 0.5}), 1);
  try {
    svm.Predict(std::vector<double>{1.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kShape);
  }
  try {
    TrainLinearSvm(std::vector<std::vector<double>>{{1}, {2}}, std::vector<int>{1, 1}, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateData);
  }
}

TEST(BaselineTest, NormalizationAbsorbsAffineShifts) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<std::vector<double>> raw, shifted;
  std::vector<int> y;
  for (int i = 0; i < 20; ++i) {
    y.push_back(i % 2);
    std::vector<double> v = {d(rng) + y.back(), d(rng), d(rng) * 3.0};
    raw.push_back(v);
    shifted.push_back({100.0 + 4.0 * v[0], -7.0 + 0.5 * v[1], 2.0 + v[2]});
  }
  auto fit = [&](const std::vector<std::vector<double>>& data) {
    const Normalizer norm = FitNormalizer(data);
    std::vector<std::vector<double>> z;
    for (const auto& v : data) z.push_back(norm.Apply(v));
    return std::make_pair(norm, TrainLinearSvm(z, y, {}));
  };
  const auto [na, sa] = fit(raw);
  const auto [nb, sb] = fit(shifted);
  for (int i = 0; i < 20; ++i) {
    EXPECT_NEAR(sa.Margin(na.Apply(raw[i])), sb.Margin(nb.Apply(shifted[i])), 1e-6);
  }
}

TEST(BaselineTest, CheckpointRoundTrip) {
  std::vector<audio::FeatureMatrix> feats;
  std::vector<int> labels;
  for (int i = 0; i < 8; ++i) {
    labels.push_back(i % 2);
    feats.push_back(RandomFeatures(20, 6, labels.back() ? 1.0f : 0.0f, 30 + i));
  }
  std::vector<const audio::FeatureMatrix*> ptrs;
  for (const auto& f : feats) ptrs.push_back(&f);
  const BaselineModel m = TrainBaseline(ptrs, labels, {});
  const BaselineModel back = BaselineFromCheckpoint(ToCheckpoint(m));
  for (const auto& f : feats) {
    const double a = BaselineMargin(m, f), b = BaselineMargin(back, f);
    EXPECT_NEAR(a, b, 1e-4 * std::max(1.0, std::abs(a)));
  }
  ad::Checkpoint wrong;
  wrong.metadata["kind"] = "head";
  EXPECT_THROW(BaselineFromCheckpoint(wrong), Error);
}

TEST(BaselineTest, RecipeSeparatesShiftedSubjects) {
  std::vector<transfer::SubjectSample> samples;
  for (int i = 0; i < 40; ++i) {
    transfer::SubjectSample s;
    s.id = "s" + std::to_string(100 + i);
    s.label = i < 15;
    s.features = RandomFeatures(30, 6, s.label ? 0.8f : 0.0f, 50 + i);
    samples.push_back(std::move(s));
  }
  eval::CvOptions o;
  o.n_boot = 200;
  const eval::EvalReport r = eval::RunCv(samples, BaselineSvmRecipe(), o);
  ASSERT_TRUE(r.classification);
  EXPECT_GE(r.classification->acc, 0.95);
  EXPECT_EQ(r.recipe, "summary-stat linear SVM");
}

}  // namespace
}  // namespace dasr::baseline
