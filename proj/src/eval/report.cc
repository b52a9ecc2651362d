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

#include "dasr/eval/report.h"

#include <cctype>
#include <cstdio>
#include <map>

#include "dasr/error.h"
#include "json.hpp"

namespace dasr::eval {

using json = nlohmann::ordered_json;
using transfer::HeadTask;

namespace {

json MetricsJson(const std::map<std::string, double>& m, const char* const* order) {
  json out = json::object();
  for (; *order; ++order) {
    if (auto it = m.find(*order); it != m.end()) out[*order] = it->second;
  }
  return out;
}

constexpr const char* kClassKeys[] = {"acc", "sen", "spe", "auc", nullptr};
constexpr const char* kRegKeys[] = {"mae", "mse", "rmse", "r2", "evs", nullptr};

std::map<std::string, double> Pooled(const EvalReport& r) {
  std::map<std::string, double> m;
  if (r.classification) {
    m = {{"acc", r.classification->acc}, {"sen", r.classification->sen},
         {"spe", r.classification->spe}, {"auc", r.classification->auc}};
  }
  if (r.regression) {
    m = {{"mae", r.regression->mae}, {"mse", r.regression->mse}, {"rmse", r.regression->rmse}};
    if (r.regression->r2) m["r2"] = *r.regression->r2;
    if (r.regression->evs) m["evs"] = *r.regression->evs;
  }
  return m;
}

}  // namespace

std::string ReportToJson(const EvalReport& r) {
  const bool cls = r.options.task == HeadTask::kClassification;
  const char* const* keys = cls ? kClassKeys : kRegKeys;
  json j;
  j["recipe"] = r.recipe;
  j["config_hash"] = r.config_hash;
  j["task"] = cls ? "classification" : "regression";
  if (!cls) j["score"] = std::string(transfer::ScoreKindName(r.options.score));
  j["k"] = r.options.k;
  j["threshold"] = r.options.threshold;
  j["n_boot"] = r.options.n_boot;
  j["level"] = r.options.level;
  j["seeds"] = {{"cv", r.options.seed}, {"bootstrap", BootstrapSeed(r.options.seed)}};
  j["complete"] = r.complete;
  json folds = json::array();
  for (const auto& f : r.folds) {
    json fj;
    fj["index"] = f.index;
    fj["seed"] = f.seed;
    fj["status"] = f.ok ? "ok" : "failed";
    if (!f.ok) fj["error"] = f.error;
    fj["n_train"] = f.n_train;
    fj["n_test"] = f.n_test;
    fj["metrics"] = MetricsJson(f.metrics, keys);
    folds.push_back(std::move(fj));
  }
  j["folds"] = std::move(folds);
  const auto pooled = Pooled(r);
  if (cls && r.classification) {
    json pj = MetricsJson(pooled, keys);
    pj["confusion"] = {{"tp", r.classification->tp},
                       {"fn", r.classification->fn},
                       {"tn", r.classification->tn},
                       {"fp", r.classification->fp}};
    j["pooled"] = std::move(pj);
  } else if (!cls && r.regression) {
    j["pooled"] = MetricsJson(pooled, keys);
  } else {
    j["pooled"] = nullptr;
  }
  json ci = json::object();
  for (const char* const* k = keys; *k; ++k) {
    if (auto it = r.ci.find(*k); it != r.ci.end()) ci[*k] = {it->second.lo, it->second.hi};
  }
  j["ci"] = std::move(ci);
  json preds = json::array();
  for (const auto& p : r.predictions) {
    preds.push_back({{"id", p.id}, {"fold", p.fold}, {"target", p.target}, {"output", p.output}});
  }
  j["predictions"] = std::move(preds);
  return j.dump(2) + "\n";
}

std::string ReportTable(std::span<const EvalReport> reports) {
  if (reports.empty()) return "";
  const bool cls = reports.front().options.task == HeadTask::kClassification;
  const char* const* keys = cls ? kClassKeys : kRegKeys;
  std::string out;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%-28s", "System");
  out += buf;
  for (const char* const* k = keys; *k; ++k) {
    std::string name = *k;
    for (char& c : name) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    std::snprintf(buf, sizeof(buf), "  %-22s", name.c_str());
    out += buf;
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  out += "\n";
  for (const auto& r : reports) {
    std::snprintf(buf, sizeof(buf), "%-28s", r.recipe.c_str());
    std::string line = buf;
    const auto pooled = Pooled(r);
    for (const char* const* k = keys; *k; ++k) {
      auto it = pooled.find(*k);
      auto ci = r.ci.find(*k);
      if (it == pooled.end()) {
        std::snprintf(buf, sizeof(buf), "  %-22s", "n/a");
      } else if (ci == r.ci.end()) {
        std::snprintf(buf, sizeof(buf), "  %-22.4f", it->second);
      } else {
        char cell[64];
        std::snprintf(cell, sizeof(cell), "%.4f [%.2f-%.2f]", it->second, ci->second.lo, ci->second.hi);
        std::snprintf(buf, sizeof(buf), "  %-22s", cell);
      }
      line += buf;
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + "\n";
  }
  return out;
}

ReportPredictions PredictionsFromJson(const std::string& text) {
  ReportPredictions out;
  try {
    const json j = json::parse(text);
    out.task = j.at("task").get<std::string>() == "regression" ? HeadTask::kRegression : HeadTask::kClassification;
    for (const auto& p : j.at("predictions")) {
      out.predictions.push_back({p.at("id").get<std::string>(), p.at("fold").get<int>(), p.at("target").get<double>(),
                                 p.at("output").get<double>()});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("malformed report: ") + e.what());
  }
  return out;
}

std::string RocCsv(std::span<const Prediction> predictions) {
  std::vector<int> labels;
  std::vector<double> scores;
  for (const auto& p : predictions) {
    labels.push_back(static_cast<int>(p.target));
    scores.push_back(p.output);
  }
  std::string out = "fpr,tpr\n";
  char buf[64];
  for (const RocPoint& pt : RocCurve(labels, scores)) {
    std::snprintf(buf, sizeof(buf), "%.6f,%.6f\n", pt.fpr, pt.tpr);
    out += buf;
  }
  return out;
}

std::string ScatterCsv(std::span<const Prediction> predictions) {
  std::string out = "id,target,prediction\n";
  char buf[64];
  for (const auto& p : predictions) {
    std::snprintf(buf, sizeof(buf), ",%.6f,%.6f\n", p.target, p.output);
    out += p.id + buf;
  }
  return out;
}

}  // namespace dasr::eval
