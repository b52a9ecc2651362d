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

#include "dasr/transfer/heads.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <set>

#include "dasr/error.h"

namespace dasr::transfer {

using ad::Var;

std::string_view FreezeVariantName(FreezeVariant v) {
  switch (v) {
    case FreezeVariant::kL:
      return "L";
    case FreezeVariant::kHL:
      return "HL";
    case FreezeVariant::kNone:
      return "none";
  }
  return "?";
}

FreezeVariant ParseFreezeVariant(std::string_view name) {
  if (name == "L" || name == "-L") return FreezeVariant::kL;
  if (name == "HL" || name == "-H-L") return FreezeVariant::kHL;
  if (name == "none" || name == "scratch") return FreezeVariant::kNone;
  throw Error(ErrorCode::kConfig, "unknown freeze variant '" + std::string(name) + "'");
}

std::string_view ScoreKindName(ScoreKind k) {
  switch (k) {
    case ScoreKind::kMmse:
      return "mmse";
    case ScoreKind::kCdr:
      return "cdr";
    case ScoreKind::kCdrSob:
      return "cdr_sob";
  }
  return "?";
}

ScoreKind ParseScoreKind(std::string_view name) {
  if (name == "mmse") return ScoreKind::kMmse;
  if (name == "cdr") return ScoreKind::kCdr;
  if (name == "cdr_sob") return ScoreKind::kCdrSob;
  throw Error(ErrorCode::kConfig, "unknown score '" + std::string(name) + "'");
}

std::string_view PoolingName(Pooling p) { return p == Pooling::kMean ? "mean" : "last"; }

Pooling ParsePooling(std::string_view name) {
  if (name == "mean") return Pooling::kMean;
  if (name == "last") return Pooling::kLastFrame;
  throw Error(ErrorCode::kConfig, "unknown pooling '" + std::string(name) + "'");
}

ScoreBounds Bounds(ScoreKind k) {
  switch (k) {
    case ScoreKind::kMmse:
      return {0.0, 30.0};
    case ScoreKind::kCdr:
      return {0.0, 3.0};
    case ScoreKind::kCdrSob:
      return {0.0, 18.0};
  }
  return {0.0, 0.0};
}

double ClampScore(ScoreKind k, double v) {
  const ScoreBounds b = Bounds(k);
  return std::clamp(v, b.lo, b.hi);
}

void HeadConfig::Validate() const {
  if (!(threshold > 0.0 && threshold < 1.0)) throw Error(ErrorCode::kConfig, "threshold must lie in (0, 1)");
}

double SubjectSample::Score(ScoreKind k) const {
  switch (k) {
    case ScoreKind::kMmse:
      return mmse;
    case ScoreKind::kCdr:
      return cdr;
    case ScoreKind::kCdrSob:
      return cdr_sob;
  }
  return 0.0;
}

std::vector<std::string> TrainableGroups(FreezeVariant v, const ad::ParamStore& store, const asr::AsrConfig& c) {
  std::set<std::string> names;
  if (v == FreezeVariant::kNone) {
    for (const auto& g : store.groups()) {
      if (g.name != asr::kCmvnGroup) names.insert(g.name);
    }
  } else {
    names = {asr::BlstmGroup(c.n_blstm_layers), kHeadGroup};
    if (v == FreezeVariant::kHL) names.insert(asr::VggGroup(1));
  }
  std::vector<std::string> ordered;
  for (const auto& g : store.groups()) {
    if (names.count(g.name)) ordered.push_back(g.name);
  }
  if (ordered.size() != names.size()) throw Error(ErrorCode::kConfig, "freeze spec names a missing group");
  return ordered;
}

ad::Checkpoint ExtractEncoder(const ad::Checkpoint& ckpt) {
  ad::Checkpoint out;
  out.metadata = asr::AsrConfig::FromMetadata(ckpt.metadata).ToMetadata();
  out.metadata["kind"] = "encoder";
  out.params = ckpt.params;
  out.params.Filter([](const std::string& name) { return name.rfind("encoder.", 0) == 0; });
  if (out.params.groups().empty()) throw Error(ErrorCode::kCheckpoint, "checkpoint has no encoder groups");
  return out;
}

namespace {

void AddHead(TransferModel& m, std::mt19937_64& rng) {
  m.params.AddUniform(kHeadGroup, "W", {m.config.encoder_dim(), 1}, m.config.init_scale, rng);
  m.params.AddZeros(kHeadGroup, "b", {1});
}

double Sigmoid(double z) { return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

}  // namespace

TransferModel MakeTransferModel(const ad::Checkpoint& encoder, HeadConfig head, FreezeVariant variant,
                                std::uint64_t seed) {
  head.Validate();
  const ad::Checkpoint enc = ExtractEncoder(encoder);
  TransferModel m;
  m.config = asr::AsrConfig::FromMetadata(enc.metadata);
  m.head = head;
  m.variant = variant;
  std::mt19937_64 rng(seed);
  asr::AddEncoderParams(m.params, m.config, rng);
  ad::CopyParams(enc.params, m.params, true);
  AddHead(m, rng);
  return m;
}

TransferModel MakeScratchModel(const asr::AsrConfig& config, HeadConfig head, std::uint64_t seed) {
  head.Validate();
  TransferModel m;
  m.config = config;
  if (m.config.vocab_size == 0) m.config.vocab_size = asr::Tokenizer::kNumReserved + 1;
  m.config.Validate();
  m.head = head;
  m.variant = FreezeVariant::kNone;
  std::mt19937_64 rng(seed);
  asr::AddEncoderParams(m.params, m.config, rng);
  AddHead(m, rng);
  return m;
}

Var<float> Pool(Var<float> enc, Pooling pooling) {
  if (enc.rows() < 1) throw Error(ErrorCode::kEmptyEncoder, "nothing to pool");
  return pooling == Pooling::kMean ? ad::MeanRows(enc) : ad::Row(enc, enc.rows() - 1);
}

Var<float> HeadOutput(const ad::BoundParams& p, const TransferModel& m, const audio::FeatureMatrix& f) {
  if (f.num_frames() * f.frame_hop_ms > kMaxSegmentMinutes * 60'000.0) {
    throw Error(ErrorCode::kTooLong, "segment longer than 15 minutes");
  }
  Var<float> pooled = Pool(asr::Encode(p, m.config, f), m.head.pooling);
  return ad::Linear(pooled, p(kHeadGroup, "W"), p(kHeadGroup, "b"));
}

double HeadValue(const TransferModel& m, const audio::FeatureMatrix& f) {
  ad::Tape<float> tape;
  ad::BoundParams p(tape, m.params);
  return HeadOutput(p, m, f).item();
}

Classification Classify(const TransferModel& m, const audio::FeatureMatrix& f) {
  const double prob = Sigmoid(HeadValue(m, f));
  return {prob, prob > m.head.threshold ? 1 : 0};
}

double PredictScore(const TransferModel& m, const audio::FeatureMatrix& f) { return HeadValue(m, f); }

void Finetune(TransferModel& m, std::span<const SubjectSample> samples, const FinetuneOptions& o) {
  const bool classify = m.head.task == HeadTask::kClassification;
  if (classify) {
    const auto pos = std::count_if(samples.begin(), samples.end(), [](const auto& s) { return s.label == 1; });
    const auto neg = static_cast<std::ptrdiff_t>(samples.size()) - pos;
    if (pos < 2 || neg < 2) throw Error(ErrorCode::kDegenerateData, "need at least two samples of each class");
  } else {
    std::set<double> distinct;
    double sum = 0.0;
    for (const auto& s : samples) {
      distinct.insert(s.Score(m.head.score));
      sum += s.Score(m.head.score);
    }
    if (distinct.size() < 2) throw Error(ErrorCode::kDegenerateData, "need at least two distinct scores");
    m.params.group(kHeadGroup).tensor("b").value[0] = static_cast<float>(sum / static_cast<double>(samples.size()));
  }
  if (m.variant == FreezeVariant::kNone) {
    // A scratch encoder has no pretraining corpus; normalize on this one.
    std::vector<const audio::FeatureMatrix*> feats;
    for (const auto& s : samples) feats.push_back(&s.features);
    asr::SetCmvn(m.params, feats);
  }
  const std::vector<std::string> trainable = TrainableGroups(m.variant, m.params, m.config);
  m.params.SetTrainable(trainable);

  ad::AdaDeltaState state = ad::MakeAdaDeltaState(m.params, o.optimizer);
  std::vector<std::size_t> order(samples.size());
  for (int epoch = 1; epoch <= o.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(o.seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(epoch));
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t i : order) {
      const SubjectSample& s = samples[i];
      m.params.ZeroGrad();
      ad::Tape<float> tape;
      ad::BoundParams p(tape, m.params);
      Var<float> out = HeadOutput(p, m, s.features);
      Var<float> loss;
      if (classify) {
        loss = ad::BceWithLogits(out, static_cast<float>(s.label));
      } else {
        const float target = static_cast<float>(s.Score(m.head.score));
        loss = ad::MeanSquaredError(out, std::span<const float>(&target, 1));
      }
      tape.Backward(loss);
      ad::ClipGradNorm(m.params, o.clip_norm);
      ad::AdaDeltaStep(m.params, state);
      total += loss.item();
    }
    if (o.on_epoch) o.on_epoch(epoch, total / static_cast<double>(samples.size()));
  }
}

ad::Checkpoint ToCheckpoint(const TransferModel& m) {
  ad::Checkpoint ckpt;
  ckpt.metadata = m.config.ToMetadata();
  ckpt.metadata["kind"] = "head";
  ckpt.metadata["task"] = m.head.task == HeadTask::kClassification ? "classification" : "regression";
  ckpt.metadata["pooling"] = std::string(PoolingName(m.head.pooling));
  char threshold[32];
  std::snprintf(threshold, sizeof(threshold), "%.17g", m.head.threshold);
  ckpt.metadata["threshold"] = threshold;
  ckpt.metadata["score"] = std::string(ScoreKindName(m.head.score));
  ckpt.metadata["freeze"] = std::string(FreezeVariantName(m.variant));
  ckpt.params = m.params;
  return ckpt;
}

TransferModel TransferModelFromCheckpoint(ad::Checkpoint ckpt) {
  if (ckpt.metadata["kind"] != "head") throw Error(ErrorCode::kCheckpoint, "not a head checkpoint");
  TransferModel m;
  m.config = asr::AsrConfig::FromMetadata(ckpt.metadata);
  m.head.task = ckpt.metadata["task"] == "regression" ? HeadTask::kRegression : HeadTask::kClassification;
  m.head.pooling = ParsePooling(ckpt.metadata["pooling"]);
  m.head.threshold = std::stod(ckpt.metadata["threshold"]);
  m.head.score = ParseScoreKind(ckpt.metadata["score"]);
  m.variant = ParseFreezeVariant(ckpt.metadata["freeze"]);
  TransferModel fresh = MakeScratchModel(m.config, m.head, 0);
  ad::CopyParams(ckpt.params, fresh.params, true);
  m.params = std::move(fresh.params);
  return m;
}

}  // namespace dasr::transfer
