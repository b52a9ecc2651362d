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

#ifndef DASR_EVAL_METRICS_H_
#define DASR_EVAL_METRICS_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace dasr::eval {

struct ClassificationMetrics {
  double acc = 0.0;
  double sen = 0.0;
  double spe = 0.0;
  double auc = 0.0;
  int tp = 0, fn = 0, tn = 0, fp = 0;
};

// Positive prediction iff score > threshold. Labels are 0/1. Both classes
// must be present (kUndefinedMetric otherwise).
ClassificationMetrics ComputeClassificationMetrics(std::span<const int> labels, std::span<const double> scores,
                                                   double threshold = 0.5);
// Defined for single-class inputs too.
double Accuracy(std::span<const int> labels, std::span<const double> scores, double threshold = 0.5);

// Probability that a random positive outscores a random negative, ties 1/2.
double AucMannWhitney(std::span<const int> labels, std::span<const double> scores);

struct RocPoint {
  double fpr, tpr;
};
// Operating points from the strictest threshold down; tied scores move
// diagonally. Starts at (0, 0) and ends at (1, 1).
std::vector<RocPoint> RocCurve(std::span<const int> labels, std::span<const double> scores);
double TrapezoidArea(std::span<const RocPoint> roc);

struct RegressionMetrics {
  double mae = 0.0;
  double mse = 0.0;
  double rmse = 0.0;
  // Undefined (empty) when the targets have zero variance.
  std::optional<double> r2;
  std::optional<double> evs;

  // Throw kUndefinedMetric when empty.
  double r2_value() const;
  double evs_value() const;
};

RegressionMetrics ComputeRegressionMetrics(std::span<const double> targets, std::span<const double> predictions);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// Statistic over a resample given as indices into the n outcomes; nullopt
// marks a degenerate resample.
using ResampleStatistic = std::function<std::optional<double>(std::span<const int> indices)>;

// Percentile bootstrap over n outcomes. Degenerate resamples are redrawn, up
// to 10 * n_boot draws in total (kUndefinedMetric beyond that).
Interval BootstrapCi(int n, const ResampleStatistic& statistic, int n_boot, double level, std::uint64_t seed);

}  // namespace dasr::eval

#endif  // DASR_EVAL_METRICS_H_
