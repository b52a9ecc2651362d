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

#include "dasr/eval/metrics.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "dasr/error.h"

namespace dasr::eval {

namespace {

void CheckBinary(std::span<const int> labels, std::span<const double> scores) {
  if (labels.size() != scores.size() || labels.empty()) {
    throw Error(ErrorCode::kShape, "labels and scores must have equal nonzero length");
  }
  for (int l : labels) {
    if (l != 0 && l != 1) throw Error(ErrorCode::kInvalidParameter, "labels must be 0 or 1");
  }
}

}  // namespace

double Accuracy(std::span<const int> labels, std::span<const double> scores, double threshold) {
  CheckBinary(labels, scores);
  int correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) correct += (scores[i] > threshold ? 1 : 0) == labels[i];
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

double AucMannWhitney(std::span<const int> labels, std::span<const double> scores) {
  CheckBinary(labels, scores);
  // Rank-sum with midranks for ties.
  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double pos_rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) {
        pos_rank_sum += midrank;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = labels.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) throw Error(ErrorCode::kUndefinedMetric, "AUC needs both classes");
  const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

std::vector<RocPoint> RocCurve(std::span<const int> labels, std::span<const double> scores) {
  CheckBinary(labels, scores);
  const auto n_pos = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  const double n_neg = static_cast<double>(labels.size()) - n_pos;
  if (n_pos == 0 || n_neg == 0) throw Error(ErrorCode::kUndefinedMetric, "ROC needs both classes");
  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<RocPoint> roc = {{0.0, 0.0}};
  double tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] == 1 ? tp : fp) += 1.0;
      ++j;
    }
    roc.push_back({fp / n_neg, tp / n_pos});
    i = j;
  }
  return roc;
}

double TrapezoidArea(std::span<const RocPoint> roc) {
  double area = 0.0;
  for (std::size_t i = 1; i < roc.size(); ++i) {
    area += (roc[i].fpr - roc[i - 1].fpr) * 0.5 * (roc[i].tpr + roc[i - 1].tpr);
  }
  return area;
}

ClassificationMetrics ComputeClassificationMetrics(std::span<const int> labels, std::span<const double> scores,
                                                   double threshold) {
  CheckBinary(labels, scores);
  ClassificationMetrics m;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool predicted = scores[i] > threshold;
    if (labels[i] == 1) {
      (predicted ? m.tp : m.fn) += 1;
    } else {
      (predicted ? m.fp : m.tn) += 1;
    }
  }
  if (m.tp + m.fn == 0 || m.tn + m.fp == 0) {
    throw Error(ErrorCode::kUndefinedMetric, "sensitivity/specificity/AUC need both classes");
  }
  m.acc = static_cast<double>(m.tp + m.tn) / static_cast<double>(labels.size());
  m.sen = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
  m.spe = static_cast<double>(m.tn) / static_cast<double>(m.tn + m.fp);
  m.auc = AucMannWhitney(labels, scores);
  return m;
}

double RegressionMetrics::r2_value() const {
  if (!r2) throw Error(ErrorCode::kUndefinedMetric, "R2 undefined for zero-variance targets");
  return *r2;
}

double RegressionMetrics::evs_value() const {
  if (!evs) throw Error(ErrorCode::kUndefinedMetric, "EVS undefined for zero-variance targets");
  return *evs;
}

RegressionMetrics ComputeRegressionMetrics(std::span<const double> y, std::span<const double> p) {
  if (y.size() != p.size() || y.empty()) {
    throw Error(ErrorCode::kShape, "targets and predictions must have equal nonzero length");
  }
  const double n = static_cast<double>(y.size());
  double abs_sum = 0.0, sq_sum = 0.0, y_mean = 0.0, e_mean = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double e = y[i] - p[i];
    abs_sum += std::abs(e);
    sq_sum += e * e;
    y_mean += y[i];
    e_mean += e;
  }
  y_mean /= n;
  e_mean /= n;
  double ss_tot = 0.0, ss_e = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    ss_tot += (y[i] - y_mean) * (y[i] - y_mean);
    const double de = (y[i] - p[i]) - e_mean;
    ss_e += de * de;
  }
  RegressionMetrics m;
  m.mae = abs_sum / n;
  m.mse = sq_sum / n;
  m.rmse = std::sqrt(m.mse);
  if (ss_tot > 0.0) {
    m.r2 = 1.0 - sq_sum / ss_tot;
    m.evs = 1.0 - ss_e / ss_tot;
  }
  return m;
}

namespace {

// Linear interpolation between order statistics.
double Quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

Interval BootstrapCi(int n, const ResampleStatistic& statistic, int n_boot, double level, std::uint64_t seed) {
  if (n < 2) throw Error(ErrorCode::kInvalidParameter, "bootstrap needs at least two outcomes");
  if (n_boot < 1 || !(level > 0.0 && level < 1.0)) throw Error(ErrorCode::kInvalidParameter, "bad bootstrap settings");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, n - 1);
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::vector<double> stats;
  stats.reserve(static_cast<std::size_t>(n_boot));
  const long max_attempts = 10L * n_boot;
  for (long attempt = 0; attempt < max_attempts && static_cast<int>(stats.size()) < n_boot; ++attempt) {
    for (int& i : idx) i = pick(rng);
    if (auto s = statistic(idx)) stats.push_back(*s);
  }
  if (static_cast<int>(stats.size()) < n_boot) {
    throw Error(ErrorCode::kUndefinedMetric, "too many degenerate bootstrap resamples");
  }
  std::sort(stats.begin(), stats.end());
  const double tail = (1.0 - level) / 2.0;
  return {Quantile(stats, tail), Quantile(stats, 1.0 - tail)};
}

}  // namespace dasr::eval
