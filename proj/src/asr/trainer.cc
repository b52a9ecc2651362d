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

#include "dasr/asr/trainer.h"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <random>

#include "dasr/ad/checkpoint.h"
#include "dasr/asr/cer.h"
#include "dasr/error.h"

namespace dasr::asr {

namespace fs = std::filesystem;

AsrExample MakeExample(const Tokenizer& tokenizer, std::string id, audio::FeatureMatrix features,
                       std::string transcript) {
  AsrExample ex{std::move(id), std::move(features), std::move(transcript), {}};
  ex.targets = tokenizer.EncodeWithMarkers(ex.transcript);
  return ex;
}

double TrainStep(AsrModel& model, ad::AdaDeltaState& state, const AsrExample& example, double clip_norm) {
  model.params.ZeroGrad();
  ad::Tape<float> tape;
  ad::BoundParams p(tape, model.params);
  ad::Var<float> loss = DecoderLoss(p, model.config, Encode(p, model.config, example.features), example.targets);
  tape.Backward(loss);
  ad::ClipGradNorm(model.params, clip_norm);
  ad::AdaDeltaStep(model.params, state);
  return loss.item();
}

double EvaluateLoss(const AsrModel& model, const AsrExample& example) {
  ad::Tape<float> tape;
  ad::BoundParams p(tape, model.params);
  return DecoderLoss(p, model.config, Encode(p, model.config, example.features), example.targets).item();
}

double EvaluateCer(const AsrModel& model, std::span<const AsrExample> examples) {
  CerAccumulator acc;
  for (const auto& ex : examples) {
    const int max_len = std::max(1, EncoderLength(ex.features.num_frames()));
    acc.Add(ex.transcript, Transcribe(model, ex.features, max_len));
  }
  return acc.Value();
}

namespace {

std::string EpochName(int epoch) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "epoch_%04d.ckpt", epoch);
  return buf;
}

void WriteCheckpoints(const AsrModel& model, const ad::AdaDeltaState& state, int epoch, const TrainAsrOptions& o) {
  if (!o.checkpoint_dir) return;
  fs::create_directories(*o.checkpoint_dir);
  ad::Checkpoint ckpt = ToCheckpoint(model);
  for (const auto& [key, value] : o.metadata) ckpt.metadata[key] = value;
  ckpt.metadata["epoch"] = std::to_string(epoch);
  ckpt.metadata["seed"] = std::to_string(o.seed);
  ckpt.optimizer = state;
  ad::SaveCheckpoint(*o.checkpoint_dir / EpochName(epoch), ckpt);
  ad::SaveCheckpoint(*o.checkpoint_dir / "last.ckpt", ckpt);
  const int stale = epoch - o.keep_checkpoints;
  if (stale >= 0) fs::remove(*o.checkpoint_dir / EpochName(stale));
}

}  // namespace

TrainAsrResult TrainAsr(AsrModel& model, std::span<const AsrExample> train, std::span<const AsrExample> dev,
                        const TrainAsrOptions& o) {
  if (train.empty()) throw Error(ErrorCode::kDegenerateData, "no usable training utterances");
  ad::AdaDeltaState state = ad::MakeAdaDeltaState(model.params, o.optimizer);
  int start = 1;
  if (o.resume && o.checkpoint_dir && fs::exists(*o.checkpoint_dir / "last.ckpt")) {
    ad::Checkpoint ckpt = ad::LoadCheckpoint(*o.checkpoint_dir / "last.ckpt");
    start = std::stoi(ckpt.metadata.at("epoch")) + 1;
    if (!ckpt.optimizer) throw Error(ErrorCode::kCheckpoint, "resume checkpoint lacks optimizer state");
    state = *ckpt.optimizer;
    model = AsrModelFromCheckpoint(std::move(ckpt));
  }

  TrainAsrResult result;
  result.last_epoch = start - 1;
  if (o.epochs == 0 && start == 1) WriteCheckpoints(model, state, 0, o);

  std::vector<std::size_t> order(train.size());
  for (int epoch = start; epoch <= o.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(o.seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(epoch));
    std::shuffle(order.begin(), order.end(), rng);
    double loss = 0.0;
    for (std::size_t i : order) loss += TrainStep(model, state, train[i], o.clip_norm);
    loss /= static_cast<double>(train.size());

    EpochLog log{epoch, "train", loss, std::nullopt};
    const bool eval = epoch == o.epochs || (o.eval_every > 0 && epoch % o.eval_every == 0);
    if (eval) {
      log.cer = EvaluateCer(model, train);
      result.final_train_cer = log.cer;
    }
    if (o.on_epoch) o.on_epoch(log);
    if (eval && !dev.empty()) {
      double dev_loss = 0.0;
      for (const auto& ex : dev) dev_loss += EvaluateLoss(model, ex);
      EpochLog dl{epoch, "dev", dev_loss / static_cast<double>(dev.size()), EvaluateCer(model, dev)};
      result.final_dev_cer = dl.cer;
      if (o.on_epoch) o.on_epoch(dl);
    }
    WriteCheckpoints(model, state, epoch, o);
    ++result.epochs_run;
    result.last_epoch = epoch;
    if (eval && o.target_train_cer && *log.cer <= *o.target_train_cer) break;
  }
  return result;
}

}  // namespace dasr::asr
