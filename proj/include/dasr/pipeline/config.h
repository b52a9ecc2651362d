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

#ifndef DASR_PIPELINE_CONFIG_H_
#define DASR_PIPELINE_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "dasr/asr/model.h"
#include "dasr/audio/augment.h"
#include "dasr/audio/features.h"
#include "dasr/pipeline/synth.h"
#include "dasr/transfer/heads.h"

namespace dasr::pipeline {

struct TrainAsrSettings {
  int epochs = 40;
  int eval_every = 10;
  int keep_checkpoints = 3;
  double clip_norm = 5.0;
  ad::AdaDeltaConfig optimizer;
  std::optional<double> target_train_cer;
};

struct FinetuneSettings {
  transfer::FreezeVariant freeze = transfer::FreezeVariant::kHL;
  transfer::HeadConfig head;
  int epochs = 30;
  double clip_norm = 5.0;
};

// Training-split augmentation for the regression heads.
struct AugmentSettings {
  int copies = 0;  // augmented copies per training subject
  audio::AugmentRanges ranges;
};

struct CvSettings {
  int k = 5;
  int n_boot = 2000;
  double level = 0.95;
  // constant | baseline | scratch | L | HL
  std::string recipe = "HL";
};

// Relative paths resolve against the output directory.
struct PathSettings {
  std::string corpus = "corpus";
  std::string features = "features";
  std::string checkpoints = "checkpoints";
  std::string reports = "reports";
};

struct ExperimentConfig {
  std::string preset = "desk";
  std::uint64_t seed = 1;
  audio::DspConfig dsp;
  asr::AsrConfig asr;
  SyntheticCorpusSpec synth;  // its seed field is replaced by `seed`
  TrainAsrSettings train_asr;
  FinetuneSettings finetune;
  AugmentSettings augment;
  CvSettings cv;
  PathSettings paths;

  // "desk" or "paper" (kConfig otherwise).
  static ExperimentConfig Preset(const std::string& name);

  void Validate() const;
  std::string ToJson() const;
  // Keys missing from `text` keep the preset named by its "preset" key (desk
  // when absent); unknown keys raise kConfig.
  static ExperimentConfig FromJson(const std::string& text);
  static ExperimentConfig Load(const std::filesystem::path& path);
  void Save(const std::filesystem::path& path) const;

  // FNV-1a of ToJson(), as 16 hex digits.
  std::string Hash() const;
};

}  // namespace dasr::pipeline

#endif  // DASR_PIPELINE_CONFIG_H_
