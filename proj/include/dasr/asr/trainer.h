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

#ifndef DASR_ASR_TRAINER_H_
#define DASR_ASR_TRAINER_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dasr/ad/adadelta.h"
#include "dasr/asr/model.h"
#include "dasr/audio/features.h"

namespace dasr::asr {

struct AsrExample {
  std::string id;
  audio::FeatureMatrix features;
  std::string transcript;
  std::vector<int> targets;  // sos ... eos
};

AsrExample MakeExample(const Tokenizer& tokenizer, std::string id, audio::FeatureMatrix features,
                       std::string transcript);

// One teacher-forced AdaDelta step on a single utterance; returns the loss
// before the update.
double TrainStep(AsrModel& model, ad::AdaDeltaState& state, const AsrExample& example, double clip_norm);

// Teacher-forced loss without updating anything.
double EvaluateLoss(const AsrModel& model, const AsrExample& example);

// Corpus CER of greedy transcriptions; decoding is capped at the encoder length.
double EvaluateCer(const AsrModel& model, std::span<const AsrExample> examples);

struct EpochLog {
  int epoch = 0;
  std::string split;
  double loss = 0.0;
  std::optional<double> cer;
};

struct TrainAsrOptions {
  int epochs = 100;
  std::uint64_t seed = 0;
  double clip_norm = 5.0;
  ad::AdaDeltaConfig optimizer;
  // CER is decoded every eval_every epochs and always after the last one.
  int eval_every = 10;
  // When set, epoch_NNNN.ckpt and last.ckpt are written here.
  std::optional<std::filesystem::path> checkpoint_dir;
  int keep_checkpoints = 3;
  // Continue from checkpoint_dir/last.ckpt if it exists.
  bool resume = false;
  // Stop early once training CER reaches this value (checked on eval epochs).
  std::optional<double> target_train_cer;
  std::function<void(const EpochLog&)> on_epoch;
  // Extra entries written into every checkpoint's metadata.
  std::map<std::string, std::string> metadata;
};

struct TrainAsrResult {
  int epochs_run = 0;
  int last_epoch = 0;
  std::optional<double> final_train_cer;
  std::optional<double> final_dev_cer;
};

// Per-utterance AdaDelta over `train` in an order shuffled by (seed, epoch).
// With epochs = 0 the initialization is checkpointed unchanged.
TrainAsrResult TrainAsr(AsrModel& model, std::span<const AsrExample> train, std::span<const AsrExample> dev,
                        const TrainAsrOptions& options);

}  // namespace dasr::asr

#endif  // DASR_ASR_TRAINER_H_
