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

#include "dasr/baseline/linear_svm.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dasr/error.h"

namespace dasr::baseline {

namespace {

constexpr double kVoicedRange = 4.0;  // natural-log units below the loudest frame

double SortedQuantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

int SummaryLength(int feature_dim) { return 5 * feature_dim + 2; }

std::vector<double> Summarize(const audio::FeatureMatrix& f) {
  const int t = f.num_frames(), dim = f.dim();
  if (t < 2) throw Error(ErrorCode::kTooShort, "summary statistics need at least two frames");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(SummaryLength(dim)));
  std::vector<double> col(static_cast<std::size_t>(t));
  const double n = t;
  for (int c = 0; c < dim; ++c) {
    for (int r = 0; r < t; ++r) col[r] = f.frames(r, c);
    std::sort(col.begin(), col.end());
    double mean = 0.0;
    for (double v : col) mean += v;
    mean /= n;
    double m2 = 0.0, m3 = 0.0;
    for (double v : col) {
      const double d = v - mean;
      m2 += d * d;
      m3 += d * d * d;
    }
    m2 /= n;
    m3 /= n;
    const bool constant = col.front() == col.back();
    const double sd = constant ? 0.0 : std::sqrt(m2);
    out.push_back(mean);
    out.push_back(sd);
    out.push_back(SortedQuantile(col, 0.1));
    out.push_back(SortedQuantile(col, 0.9));
    out.push_back(sd > 0.0 ? m3 / (sd * sd * sd) : 0.0);
  }
  out.push_back(n * f.frame_hop_ms / 1000.0);

  const int statics = dim % 3 == 0 ? dim / 3 : dim;
  std::vector<double> energy(static_cast<std::size_t>(t));
  for (int r = 0; r < t; ++r) {
    double e = 0.0;
    for (int c = 0; c < statics; ++c) e += f.frames(r, c);
    energy[r] = e / statics;
  }
  const double loudest = *std::max_element(energy.begin(), energy.end());
  const auto voiced = std::count_if(energy.begin(), energy.end(), [&](double e) { return e > loudest - kVoicedRange; });
  out.push_back(static_cast<double>(voiced) / n);
  return out;
}

std::vector<double> Normalizer::Apply(std::span<const double> x) const {
  if (x.size() != mean.size()) throw Error(ErrorCode::kShape, "summary vector length mismatch");
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - mean[i]) * scale[i];
  return out;
}

Normalizer FitNormalizer(std::span<const std::vector<double>> vectors) {
  if (vectors.empty()) throw Error(ErrorCode::kDegenerateData, "no vectors to normalize");
  const std::size_t d = vectors.front().size();
  Normalizer norm;
  norm.mean.assign(d, 0.0);
  norm.scale.assign(d, 1.0);
  const double n = static_cast<double>(vectors.size());
  for (const auto& v : vectors) {
    if (v.size() != d) throw Error(ErrorCode::kShape, "summary vector length mismatch");
    for (std::size_t i = 0; i < d; ++i) norm.mean[i] += v[i] / n;
  }
  for (std::size_t i = 0; i < d; ++i) {
    double var = 0.0;
    for (const auto& v : vectors) var += (v[i] - norm.mean[i]) * (v[i] - norm.mean[i]);
    const double sd = std::sqrt(var / n);
    if (sd > 1e-12 * std::max(1.0, std::abs(norm.mean[i]))) norm.scale[i] = 1.0 / sd;
  }
  return norm;
}

double LinearSvm::Margin(std::span<const double> x) const {
  if (x.size() != w.size()) throw Error(ErrorCode::kShape, "input length does not match the model");
  double m = b;
  for (std::size_t i = 0; i < x.size(); ++i) m += w[i] * x[i];
  return m;
}

int LinearSvm::Predict(std::span<const double> x) const { return Margin(x) > 0.0 ? 1 : 0; }

double HingeObjective(const LinearSvm& svm, std::span<const std::vector<double>> x, std::span<const int> labels,
                      double c) {
  double obj = 0.0;
  for (double v : svm.w) obj += 0.5 * v * v;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double y = labels[i] == 1 ? 1.0 : -1.0;
    obj += c * std::max(0.0, 1.0 - y * svm.Margin(x[i]));
  }
  return obj;
}

namespace {

// Bias minimizing the hinge sum for fixed margins; the optimum of a
// piecewise-linear convex function sits on a breakpoint.
double BestBias(const std::vector<double>& margins, const std::vector<double>& y, double current) {
  double best_b = current, best = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < margins.size(); ++j) {
    const double b = y[j] - margins[j];
    double loss = 0.0;
    for (std::size_t i = 0; i < margins.size(); ++i) loss += std::max(0.0, 1.0 - y[i] * (margins[i] + b));
    if (loss < best) {
      best = loss;
      best_b = b;
    }
  }
  return best_b;
}

}  // namespace

LinearSvm TrainLinearSvm(std::span<const std::vector<double>> x, std::span<const int> labels, const SvmOptions& o,
                         std::vector<double>* trace) {
  if (x.size() != labels.size() || x.empty()) throw Error(ErrorCode::kShape, "vectors and labels differ in length");
  if (!(o.c > 0.0) || o.epochs < 1) throw Error(ErrorCode::kInvalidParameter, "C must be positive, epochs >= 1");
  const auto pos = std::count(labels.begin(), labels.end(), 1);
  if (pos == 0 || pos == static_cast<long>(labels.size())) {
    throw Error(ErrorCode::kDegenerateData, "linear SVM needs both classes");
  }
  const std::size_t n = x.size(), d = x.front().size();
  for (const auto& v : x) {
    if (v.size() != d) throw Error(ErrorCode::kShape, "vectors differ in length");
  }
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = labels[i] == 1 ? 1.0 : -1.0;
  const double lambda = 1.0 / (o.c * static_cast<double>(n));

  LinearSvm cur{std::vector<double>(d, 0.0), 0.0};
  LinearSvm best = cur;
  double best_obj = HingeObjective(cur, x, labels, o.c);
  std::vector<double> margins(n), grad(d);
  auto consider = [&](const LinearSvm& candidate) {
    const double obj = HingeObjective(candidate, x, labels, o.c);
    if (obj < best_obj) {
      best_obj = obj;
      best = candidate;
    }
  };
  long t = 0;
  for (int epoch = 0; epoch < o.epochs; ++epoch) {
    for (std::size_t step = 0; step < n; ++step) {
      ++t;
      double hinge = 0.0, gb = 0.0;
      for (std::size_t j = 0; j < d; ++j) grad[j] = lambda * cur.w[j];
      for (std::size_t i = 0; i < n; ++i) {
        margins[i] = cur.Margin(x[i]);
        const double slack = 1.0 - y[i] * margins[i];
        if (slack > 0.0) {
          hinge += slack;
          for (std::size_t j = 0; j < d; ++j) grad[j] -= y[i] * x[i][j] / static_cast<double>(n);
          gb -= y[i] / static_cast<double>(n);
        }
      }
      double reg = 0.0;
      for (double v : cur.w) reg += 0.5 * v * v;
      if (const double obj = reg + o.c * hinge; obj < best_obj) {
        best_obj = obj;
        best = cur;
      }
      const double eta = 1.0 / (lambda * static_cast<double>(t));
      for (std::size_t j = 0; j < d; ++j) cur.w[j] -= eta * grad[j];
      cur.b -= eta * gb;
    }
    consider(cur);
    for (std::size_t i = 0; i < n; ++i) margins[i] = cur.Margin(x[i]) - cur.b;
    LinearSvm rebias = cur;
    rebias.b = BestBias(margins, y, cur.b);
    consider(rebias);
    if (trace) trace->push_back(HingeObjective(cur, x, labels, o.c));
  }
  return best;
}

BaselineModel TrainBaseline(std::span<const audio::FeatureMatrix* const> features, std::span<const int> labels,
                            const SvmOptions& options) {
  std::vector<std::vector<double>> raw;
  for (const auto* f : features) raw.push_back(Summarize(*f));
  BaselineModel m;
  m.norm = FitNormalizer(raw);
  for (auto& v : raw) v = m.norm.Apply(v);
  m.svm = TrainLinearSvm(raw, labels, options);
  return m;
}

double BaselineMargin(const BaselineModel& m, const audio::FeatureMatrix& f) {
  return m.svm.Margin(m.norm.Apply(Summarize(f)));
}

ad::Checkpoint ToCheckpoint(const BaselineModel& m) {
  ad::Checkpoint ckpt;
  ckpt.metadata["kind"] = "baseline";
  const int d = static_cast<int>(m.svm.w.size());
  auto fill = [](ad::Parameter& p, const std::vector<double>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) p.value[i] = static_cast<float>(v[i]);
  };
  fill(ckpt.params.AddZeros("baseline.norm", "mean", {d}), m.norm.mean);
  fill(ckpt.params.AddZeros("baseline.norm", "scale", {d}), m.norm.scale);
  fill(ckpt.params.AddZeros("baseline.linear", "W", {d}), m.svm.w);
  ckpt.params.AddZeros("baseline.linear", "b", {1}).value[0] = static_cast<float>(m.svm.b);
  return ckpt;
}

BaselineModel BaselineFromCheckpoint(const ad::Checkpoint& ckpt) {
  auto kind = ckpt.metadata.find("kind");
  if (kind == ckpt.metadata.end() || kind->second != "baseline" || !ckpt.params.HasGroup("baseline.norm") ||
      !ckpt.params.HasGroup("baseline.linear")) {
    throw Error(ErrorCode::kCheckpoint, "not a baseline checkpoint");
  }
  auto read = [](const ad::Parameter& p) { return std::vector<double>(p.value.begin(), p.value.end()); };
  BaselineModel m;
  const auto& norm = ckpt.params.group("baseline.norm");
  const auto& lin = ckpt.params.group("baseline.linear");
  m.norm.mean = read(norm.tensor("mean"));
  m.norm.scale = read(norm.tensor("scale"));
  m.svm.w = read(lin.tensor("W"));
  m.svm.b = lin.tensor("b").value.at(0);
  if (m.norm.mean.size() != m.svm.w.size() || m.norm.scale.size() != m.svm.w.size()) {
    throw Error(ErrorCode::kCheckpoint, "baseline tensors disagree in length");
  }
  return m;
}

namespace {

class BaselinePredictor : public eval::Predictor {
 public:
  explicit BaselinePredictor(BaselineModel m) : m_(std::move(m)) {}
  double Predict(const transfer::SubjectSample& s) const override {
    const double z = BaselineMargin(m_, s.features);
    return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
  }

 private:
  BaselineModel m_;
};

}  // namespace

std::unique_ptr<eval::Predictor> BaselineSvmRecipe::Fit(std::span<const transfer::SubjectSample> train,
                                                        std::uint64_t) const {
  std::vector<const audio::FeatureMatrix*> feats;
  std::vector<int> labels;
  for (const auto& s : train) {
    feats.push_back(&s.features);
    labels.push_back(s.label);
  }
  return std::make_unique<BaselinePredictor>(TrainBaseline(feats, labels, options_));
}

}  // namespace dasr::baseline
