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

#ifndef DASR_TRANSFER_HEADS_H_
#define DASR_TRANSFER_HEADS_H_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dasr/ad/adadelta.h"
#include "dasr/ad/checkpoint.h"
#include "dasr/asr/model.h"
#include "dasr/audio/features.h"
#include "dasr/audio/wav.h"

namespace dasr::transfer {

// L: last BiLSTM layer + head. HL: additionally the first conv layer.
// None: everything trainable, starting from a random encoder.
enum class FreezeVariant { kL, kHL, kNone };
enum class HeadTask { kClassification, kRegression };
enum class Pooling { kMean, kLastFrame };
enum class ScoreKind { kMmse, kCdr, kCdrSob };

std::string_view FreezeVariantName(FreezeVariant v);
// Accepts "L", "-L", "HL", "-H-L", "none", "scratch".
FreezeVariant ParseFreezeVariant(std::string_view name);
std::string_view ScoreKindName(ScoreKind k);
ScoreKind ParseScoreKind(std::string_view name);
std::string_view PoolingName(Pooling p);
Pooling ParsePooling(std::string_view name);

struct ScoreBounds {
  double lo, hi;
};
ScoreBounds Bounds(ScoreKind k);
double ClampScore(ScoreKind k, double v);

struct HeadConfig {
  HeadTask task = HeadTask::kClassification;
  Pooling pooling = Pooling::kMean;
  double threshold = 0.5;
  ScoreKind score = ScoreKind::kMmse;  // regression target

  void Validate() const;
};

// One picture-description segment per subject.
struct SubjectSample {
  std::string id;
  audio::AudioBuffer audio;
  audio::FeatureMatrix features;
  int label = 0;  // 1 = dementia
  double mmse = 0.0;
  double cdr = 0.0;
  double cdr_sob = 0.0;

  double Score(ScoreKind k) const;
};

inline constexpr const char* kHeadGroup = "head.linear";
inline constexpr double kMaxSegmentMinutes = 15.0;

// Trainable groups for a variant, in store order.
std::vector<std::string> TrainableGroups(FreezeVariant v, const ad::ParamStore& store, const asr::AsrConfig& config);

// Keeps only encoder.* groups of an ASR (or encoder) checkpoint.
ad::Checkpoint ExtractEncoder(const ad::Checkpoint& ckpt);

struct TransferModel {
  asr::AsrConfig config;
  HeadConfig head;
  FreezeVariant variant = FreezeVariant::kHL;
  ad::ParamStore params;  // encoder.* + head.linear
};

// Encoder weights copied bit-exactly from `encoder`; fresh head.
TransferModel MakeTransferModel(const ad::Checkpoint& encoder, HeadConfig head, FreezeVariant variant,
                                std::uint64_t seed);
// Random encoder and head; variant is kNone.
TransferModel MakeScratchModel(const asr::AsrConfig& config, HeadConfig head, std::uint64_t seed);

// Temporal pooling of encoder frames [U, D] -> [1, D].
ad::Var<float> Pool(ad::Var<float> encoder_out, Pooling pooling);

// w . pool(encode(x)) + b as [1, 1]. Segments over 15 minutes raise kTooLong.
ad::Var<float> HeadOutput(const ad::BoundParams& p, const TransferModel& model, const audio::FeatureMatrix& features);

struct Classification {
  double probability;
  int label;  // 1 iff probability > threshold
};

double HeadValue(const TransferModel& model, const audio::FeatureMatrix& features);
Classification Classify(const TransferModel& model, const audio::FeatureMatrix& features);
// Raw linear output; clamp with ClampScore for reporting.
double PredictScore(const TransferModel& model, const audio::FeatureMatrix& features);

struct FinetuneOptions {
  int epochs = 30;
  std::uint64_t seed = 0;
  double clip_norm = 5.0;
  ad::AdaDeltaConfig optimizer;
  std::function<void(int epoch, double loss)> on_epoch;
};

// BCE (classification) or MSE (regression) with per-sample AdaDelta steps;
// only the variant's trainable groups change. A regression head's bias starts
// at the mean training target. Fewer than two samples per class, or fewer than
// two distinct scores, raise kDegenerateData.
void Finetune(TransferModel& model, std::span<const SubjectSample> samples, const FinetuneOptions& options);

ad::Checkpoint ToCheckpoint(const TransferModel& model);
TransferModel TransferModelFromCheckpoint(ad::Checkpoint ckpt);

}  // namespace dasr::transfer

#endif  // DASR_TRANSFER_HEADS_H_
