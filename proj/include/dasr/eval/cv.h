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

#ifndef DASR_EVAL_CV_H_
#define DASR_EVAL_CV_H_

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dasr/eval/metrics.h"
#include "dasr/transfer/heads.h"

namespace dasr::eval {

struct FoldSplit {
  int k = 0;
  std::vector<std::vector<std::string>> folds;  // subject ids
  std::vector<int> fold_of;                      // per input position
};

// Within each stratum (ascending), ids are sorted, shuffled by `seed` and
// dealt round-robin; the deal continues across strata so fold sizes stay
// balanced. Strata smaller than k raise kStratification.
FoldSplit StratifiedKFold(std::span<const std::string> ids, std::span<const int> strata, int k,
                          std::uint64_t seed);

// Quartile bucket (0..3) of each score by rank; ties broken by position.
std::vector<int> QuartileStrata(std::span<const double> scores);

class Predictor {
 public:
  virtual ~Predictor() = default;
  // Probability of dementia (classification) or a score (regression).
  virtual double Predict(const transfer::SubjectSample& sample) const = 0;
};

class Recipe {
 public:
  virtual ~Recipe() = default;
  virtual std::string Name() const = 0;
  virtual std::unique_ptr<Predictor> Fit(std::span<const transfer::SubjectSample> train,
                                         std::uint64_t seed) const = 0;
};

// Always non-dementia (probability 0), or the training-mean score.
class ConstantRecipe : public Recipe {
 public:
  ConstantRecipe(transfer::HeadTask task, transfer::ScoreKind score) : task_(task), score_(score) {}
  std::string Name() const override;
  std::unique_ptr<Predictor> Fit(std::span<const transfer::SubjectSample> train,
                                 std::uint64_t seed) const override;

 private:
  transfer::HeadTask task_;
  transfer::ScoreKind score_;
};

struct CvOptions {
  int k = 5;
  std::uint64_t seed = 1;
  int n_boot = 2000;
  double level = 0.95;
  transfer::HeadTask task = transfer::HeadTask::kClassification;
  transfer::ScoreKind score = transfer::ScoreKind::kMmse;
  double threshold = 0.5;
};

struct Prediction {
  std::string id;
  int fold = 0;
  double target = 0.0;  // label or score
  double output = 0.0;  // probability or predicted score
};

struct FoldResult {
  int index = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  int n_train = 0;
  int n_test = 0;
  // Per-fold metrics when the fold has what they need.
  std::map<std::string, double> metrics;
};

struct EvalReport {
  std::string recipe;
  std::string config_hash;
  CvOptions options;
  std::vector<FoldResult> folds;
  std::vector<Prediction> predictions;
  bool complete = false;  // every fold trained and predicted
  std::optional<ClassificationMetrics> classification;
  std::optional<RegressionMetrics> regression;
  std::map<std::string, Interval> ci;
};

std::uint64_t FoldSeed(std::uint64_t seed, int fold);
std::uint64_t BootstrapSeed(std::uint64_t seed);

// Folds run in order on this thread. A fold whose Fit or Predict throws is
// marked failed; pooled metrics and intervals need all folds.
EvalReport RunCv(std::span<const transfer::SubjectSample> samples, const Recipe& recipe, const CvOptions& options);

// Pooled metrics and percentile-bootstrap intervals over `predictions`.
void ComputePooled(EvalReport& report);

}  // namespace dasr::eval

#endif  // DASR_EVAL_CV_H_
