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

#ifndef DASR_EVAL_REPORT_H_
#define DASR_EVAL_REPORT_H_

#include <span>
#include <string>
#include <vector>

#include "dasr/eval/cv.h"

namespace dasr::eval {

// Stable JSON: fixed key order, every seed used, per-fold and pooled metrics,
// intervals and per-subject predictions.
std::string ReportToJson(const EvalReport& report);

// One row per report: ACC SEN SPE AUC for classification, or
// MAE MSE RMSE R2 EVS for regression, each with its interval.
std::string ReportTable(std::span<const EvalReport> reports);

struct ReportPredictions {
  transfer::HeadTask task = transfer::HeadTask::kClassification;
  std::vector<Prediction> predictions;
};
// Reads back the task and predictions of a ReportToJson document (kFormat).
ReportPredictions PredictionsFromJson(const std::string& json);

// "fpr,tpr" operating points (classification).
std::string RocCsv(std::span<const Prediction> predictions);
// "id,target,prediction" rows.
std::string ScatterCsv(std::span<const Prediction> predictions);

}  // namespace dasr::eval

#endif  // DASR_EVAL_REPORT_H_
