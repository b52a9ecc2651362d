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

#include "dasr/eval/cv.h"

#include <algorithm>
#include <exception>
#include <numeric>
#include <random>
#include <set>

#include "dasr/error.h"

namespace dasr::eval {

using transfer::HeadTask;
using transfer::SubjectSample;

FoldSplit StratifiedKFold(std::span<const std::string> ids, std::span<const int> strata, int k,
                          std::uint64_t seed) {
  if (ids.size() != strata.size()) throw Error(ErrorCode::kShape, "ids and strata differ in length");
  if (k < 2) throw Error(ErrorCode::kInvalidParameter, "k must be at least 2");
  if (ids.size() < static_cast<std::size_t>(k)) throw Error(ErrorCode::kStratification, "fewer subjects than folds");
  if (std::set<std::string>(ids.begin(), ids.end()).size() != ids.size()) {
    throw Error(ErrorCode::kInvalidParameter, "duplicate subject id");
  }
  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < ids.size(); ++i) members[strata[i]].push_back(i);

  FoldSplit split;
  split.k = k;
  split.folds.resize(static_cast<std::size_t>(k));
  split.fold_of.assign(ids.size(), -1);
  std::mt19937_64 rng(seed);
  int next = 0;
  for (auto& [stratum, idx] : members) {
    if (idx.size() < static_cast<std::size_t>(k)) {
      throw Error(ErrorCode::kStratification,
                  "stratum " + std::to_string(stratum) + " has " + std::to_string(idx.size()) +
                      " members, fewer than k=" + std::to_string(k));
    }
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return ids[a] < ids[b]; });
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t i : idx) {
      split.fold_of[i] = next;
      split.folds[static_cast<std::size_t>(next)].push_back(ids[i]);
      next = (next + 1) % k;
    }
  }
  return split;
}

std::vector<int> QuartileStrata(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::vector<int> strata(scores.size());
  for (std::size_t r = 0; r < order.size(); ++r) strata[order[r]] = static_cast<int>(4 * r / order.size());
  return strata;
}

namespace {

class ConstantPredictor : public Predictor {
 public:
  explicit ConstantPredictor(double v) : v_(v) {}
  double Predict(const SubjectSample&) const override { return v_; }

 private:
  double v_;
};

std::uint64_t SplitMix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

std::string ConstantRecipe::Name() const {
  return task_ == HeadTask::kClassification ? "constant non-dementia" : "constant mean";
}

std::unique_ptr<Predictor> ConstantRecipe::Fit(std::span<const SubjectSample> train, std::uint64_t) const {
  if (task_ == HeadTask::kClassification) return std::make_unique<ConstantPredictor>(0.0);
  if (train.empty()) throw Error(ErrorCode::kDegenerateData, "empty training fold");
  double sum = 0.0;
  for (const auto& s : train) sum += s.Score(score_);
  return std::make_unique<ConstantPredictor>(sum / static_cast<double>(train.size()));
}

std::uint64_t FoldSeed(std::uint64_t seed, int fold) { return SplitMix(seed ^ (0x100000000ULL * (fold + 1))); }
std::uint64_t BootstrapSeed(std::uint64_t seed) { return SplitMix(seed ^ 0xB0075781ULL); }

namespace {

double Target(const SubjectSample& s, const CvOptions& o) {
  return o.task == HeadTask::kClassification ? s.label : s.Score(o.score);
}

std::map<std::string, double> FoldMetrics(std::span<const Prediction> preds, const CvOptions& o) {
  std::map<std::string, double> out;
  if (preds.empty()) return out;
  if (o.task == HeadTask::kClassification) {
    std::vector<int> labels;
    std::vector<double> scores;
    for (const auto& p : preds) {
      labels.push_back(static_cast<int>(p.target));
      scores.push_back(p.output);
    }
    out["acc"] = Accuracy(labels, scores, o.threshold);
    const auto pos = std::count(labels.begin(), labels.end(), 1);
    if (pos > 0 && pos < static_cast<long>(labels.size())) {
      const ClassificationMetrics m = ComputeClassificationMetrics(labels, scores, o.threshold);
      out["sen"] = m.sen;
      out["spe"] = m.spe;
      out["auc"] = m.auc;
    }
  } else {
    std::vector<double> y, p;
    for (const auto& pr : preds) {
      y.push_back(pr.target);
      p.push_back(pr.output);
    }
    const RegressionMetrics m = ComputeRegressionMetrics(y, p);
    out["mae"] = m.mae;
    out["mse"] = m.mse;
    out["rmse"] = m.rmse;
    if (m.r2) out["r2"] = *m.r2;
    if (m.evs) out["evs"] = *m.evs;
  }
  return out;
}

}  // namespace

EvalReport RunCv(std::span<const SubjectSample> samples, const Recipe& recipe, const CvOptions& o) {
  if (o.task == HeadTask::kClassification && !(o.threshold > 0.0 && o.threshold < 1.0)) {
    throw Error(ErrorCode::kInvalidParameter, "threshold must lie in (0, 1)");
  }
  std::vector<std::string> ids;
  std::vector<double> targets;
  for (const auto& s : samples) {
    ids.push_back(s.id);
    targets.push_back(Target(s, o));
  }
  std::vector<int> strata;
  if (o.task == HeadTask::kClassification) {
    for (const auto& s : samples) strata.push_back(s.label);
  } else {
    strata = QuartileStrata(targets);
  }
  const FoldSplit split = StratifiedKFold(ids, strata, o.k, o.seed);

  EvalReport report;
  report.recipe = recipe.Name();
  report.options = o;
  report.complete = true;
  std::vector<std::vector<Prediction>> per_fold(static_cast<std::size_t>(o.k));
  for (int f = 0; f < o.k; ++f) {
    FoldResult fr;
    fr.index = f;
    fr.seed = FoldSeed(o.seed, f);
    std::vector<SubjectSample> train;
    std::vector<std::size_t> test;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (split.fold_of[i] == f) {
        test.push_back(i);
      } else {
        train.push_back(samples[i]);
      }
    }
    fr.n_train = static_cast<int>(train.size());
    fr.n_test = static_cast<int>(test.size());
    try {
      const std::unique_ptr<Predictor> predictor = recipe.Fit(train, fr.seed);
      for (std::size_t i : test) {
        per_fold[f].push_back({samples[i].id, f, targets[i], predictor->Predict(samples[i])});
      }
      fr.ok = true;
      fr.metrics = FoldMetrics(per_fold[f], o);
    } catch (const std::exception& e) {
      fr.ok = false;
      fr.error = e.what();
      per_fold[f].clear();
      report.complete = false;
    }
    report.folds.push_back(std::move(fr));
  }
  // Pooled predictions in input order.
  std::map<std::string, const Prediction*> by_id;
  for (const auto& fold : per_fold) {
    for (const auto& p : fold) by_id[p.id] = &p;
  }
  for (const auto& s : samples) {
    if (auto it = by_id.find(s.id); it != by_id.end()) report.predictions.push_back(*it->second);
  }
  if (report.complete) ComputePooled(report);
  return report;
}

void ComputePooled(EvalReport& r) {
  const CvOptions& o = r.options;
  const int n = static_cast<int>(r.predictions.size());
  const std::uint64_t seed = BootstrapSeed(o.seed);
  r.ci.clear();
  if (o.task == HeadTask::kClassification) {
    std::vector<int> labels;
    std::vector<double> scores;
    for (const auto& p : r.predictions) {
      labels.push_back(static_cast<int>(p.target));
      scores.push_back(p.output);
    }
    r.classification = ComputeClassificationMetrics(labels, scores, o.threshold);
    auto stat = [&](auto metric) {
      return [&, metric](std::span<const int> idx) -> std::optional<double> {
        std::vector<int> l;
        std::vector<double> s;
        for (int i : idx) {
          l.push_back(labels[i]);
          s.push_back(scores[i]);
        }
        const auto pos = std::count(l.begin(), l.end(), 1);
        if (pos == 0 || pos == static_cast<long>(l.size())) return std::nullopt;
        return metric(ComputeClassificationMetrics(l, s, o.threshold));
      };
    };
    r.ci["acc"] = BootstrapCi(n, stat([](const ClassificationMetrics& m) { return m.acc; }), o.n_boot, o.level, seed);
    r.ci["sen"] = BootstrapCi(n, stat([](const ClassificationMetrics& m) { return m.sen; }), o.n_boot, o.level, seed);
    r.ci["spe"] = BootstrapCi(n, stat([](const ClassificationMetrics& m) { return m.spe; }), o.n_boot, o.level, seed);
    r.ci["auc"] = BootstrapCi(n, stat([](const ClassificationMetrics& m) { return m.auc; }), o.n_boot, o.level, seed);
  } else {
    std::vector<double> y, p;
    for (const auto& pr : r.predictions) {
      y.push_back(pr.target);
      p.push_back(pr.output);
    }
    r.regression = ComputeRegressionMetrics(y, p);
    auto stat = [&](auto metric) {
      return [&, metric](std::span<const int> idx) -> std::optional<double> {
        std::vector<double> yy, pp;
        for (int i : idx) {
          yy.push_back(y[i]);
          pp.push_back(p[i]);
        }
        return metric(ComputeRegressionMetrics(yy, pp));
      };
    };
    using M = RegressionMetrics;
    r.ci["mae"] = BootstrapCi(n, stat([](const M& m) -> std::optional<double> { return m.mae; }), o.n_boot, o.level, seed);
    r.ci["mse"] = BootstrapCi(n, stat([](const M& m) -> std::optional<double> { return m.mse; }), o.n_boot, o.level, seed);
    r.ci["rmse"] = BootstrapCi(n, stat([](const M& m) -> std::optional<double> { return m.rmse; }), o.n_boot, o.level, seed);
    if (r.regression->r2) {
      r.ci["r2"] = BootstrapCi(n, stat([](const M& m) { return m.r2; }), o.n_boot, o.level, seed);
      r.ci["evs"] = BootstrapCi(n, stat([](const M& m) { return m.evs; }), o.n_boot, o.level, seed);
    }
  }
}

}  // namespace dasr::eval
