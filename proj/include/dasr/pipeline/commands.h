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

#ifndef DASR_PIPELINE_COMMANDS_H_
#define DASR_PIPELINE_COMMANDS_H_

#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "dasr/asr/trainer.h"
#include "dasr/eval/cv.h"
#include "dasr/pipeline/config.h"

namespace dasr::pipeline {

struct RunContext {
  ExperimentConfig config;
  std::filesystem::path out = ".";
  std::ostream* log = nullptr;  // progress lines; never part of an artifact
  bool resume = false;          // train-asr: continue from the last epoch checkpoint
};

std::filesystem::path CorpusDir(const RunContext& ctx);
std::filesystem::path CheckpointDir(const RunContext& ctx);
std::filesystem::path ReportDir(const RunContext& ctx);
std::filesystem::path AsrCheckpointPath(const RunContext& ctx);
std::filesystem::path HeadCheckpointPath(const RunContext& ctx);
std::filesystem::path ReportPath(const RunContext& ctx, const std::string& recipe);

// Raises kDependency naming `path` when it does not exist.
void RequireFile(const std::filesystem::path& path, const std::string& what);

struct ManifestEntry {
  std::string id;
  std::string wav;  // relative to the corpus directory
  std::string transcript;
  std::string speaker;
};
std::vector<ManifestEntry> ReadAsrManifest(const std::filesystem::path& path);

// Subjects with audio and features loaded.
std::vector<transfer::SubjectSample> LoadSubjects(const std::filesystem::path& corpus_dir,
                                                  const audio::DspConfig& dsp);

// Fine-tunes a transfer model per fold: from `encoder` under `variant`, or from
// scratch when `encoder` is empty. Regression training splits get
// `augment.copies` augmented copies of every subject.
class TransferRecipe : public eval::Recipe {
 public:
  TransferRecipe(std::optional<ad::Checkpoint> encoder, const ExperimentConfig& config);
  std::string Name() const override;
  std::unique_ptr<eval::Predictor> Fit(std::span<const transfer::SubjectSample> train,
                                       std::uint64_t seed) const override;
  transfer::TransferModel Train(std::span<const transfer::SubjectSample> train, std::uint64_t seed) const;

 private:
  std::optional<ad::Checkpoint> encoder_;
  ExperimentConfig config_;
};

// The recipe named by config.cv.recipe; L and HL need the ASR checkpoint.
std::unique_ptr<eval::Recipe> MakeRecipe(const RunContext& ctx);

void CmdSynth(const RunContext& ctx);
// Writes <out>/features/<stem>.feat for each wav, or for every corpus wav
// when `wavs` is empty. Returns the written paths.
std::vector<std::filesystem::path> CmdFeaturize(const RunContext& ctx, std::span<const std::filesystem::path> wavs);
asr::TrainAsrResult CmdTrainAsr(const RunContext& ctx);
void CmdFinetune(const RunContext& ctx);
eval::EvalReport CmdEval(const RunContext& ctx);
// Corpus CER over line-aligned reference and hypothesis files.
double CmdCer(const std::filesystem::path& ref, const std::filesystem::path& hyp);
// roc.csv (classification) and scatter.csv from a report file.
std::vector<std::filesystem::path> CmdExportPlots(const std::filesystem::path& report,
                                                  const std::filesystem::path& out_dir);

}  // namespace dasr::pipeline

#endif  // DASR_PIPELINE_COMMANDS_H_
