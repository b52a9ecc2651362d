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

#ifndef DASR_BASELINE_LINEAR_SVM_H_
#define DASR_BASELINE_LINEAR_SVM_H_

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dasr/ad/checkpoint.h"
#include "dasr/audio/features.h"
#include "dasr/eval/cv.h"

namespace dasr::baseline {

// Per column {mean, std, p10, p90, skewness}, then duration (s) and the
// fraction of frames whose mean static log-mel is within 4 of the loudest.
// Columns are sorted before any statistic, so frame order never matters.
std::vector<double> Summarize(const audio::FeatureMatrix& features);
int SummaryLength(int feature_dim);

struct Normalizer {
  std::vector<double> mean;
  std::vector<double> scale;  // 1 / std, or 1 for constant dimensions

  std::vector<double> Apply(std::span<const double> x) const;
};
Normalizer FitNormalizer(std::span<const std::vector<double>> vectors);

struct LinearSvm {
  std::vector<double> w;
  double b = 0.0;

  double Margin(std::span<const double> x) const;  // kShape on length mismatch
  // 1 (dementia) iff the margin is strictly positive.
  int Predict(std::span<const double> x) const;
};

struct SvmOptions {
  double c = 1.0;
  int epochs = 200;
};

// 1/2 |w|^2 + C * sum hinge(y (w.x + b)), labels 0/1 mapped to -1/+1.
double HingeObjective(const LinearSvm& svm, std::span<const std::vector<double>> x, std::span<const int> labels,
                      double c);

// Full-batch subgradient descent on the objective scaled by 1/(C n), step
// 1/(lambda t) with lambda = 1/(C n), n steps per epoch. The lowest-objective
// iterate is returned; every candidate is also scored with its best bias.
// `trace`, when given, receives the objective of the running iterate after
// each epoch. A single class raises kDegenerateData.
LinearSvm TrainLinearSvm(std::span<const std::vector<double>> x, std::span<const int> labels,
                         const SvmOptions& options, std::vector<double>* trace = nullptr);

struct BaselineModel {
  Normalizer norm;
  LinearSvm svm;
};

BaselineModel TrainBaseline(std::span<const audio::FeatureMatrix* const> features, std::span<const int> labels,
                            const SvmOptions& options);
double BaselineMargin(const BaselineModel& model, const audio::FeatureMatrix& features);

// Groups baseline.norm {mean, scale} and baseline.linear {W, b}; kind "baseline".
ad::Checkpoint ToCheckpoint(const BaselineModel& model);
BaselineModel BaselineFromCheckpoint(const ad::Checkpoint& ckpt);

// Slots into eval::RunCv; the output is the logistic of the margin, so the
// 0.5 threshold is the margin-0 tie rule.
class BaselineSvmRecipe : public eval::Recipe {
 public:
  explicit BaselineSvmRecipe(SvmOptions options = {}) : options_(options) {}
  std::string Name() const override { return "summary-stat linear SVM"; }
  std::unique_ptr<eval::Predictor> Fit(std::span<const transfer::SubjectSample> train,
                                       std::uint64_t seed) const override;

 private:
  SvmOptions options_;
};

}  // namespace dasr::baseline

#endif  // DASR_BASELINE_LINEAR_SVM_H_
