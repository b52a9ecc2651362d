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

#include "dasr/pipeline/config.h"

#include <cstdio>
#include <initializer_list>
#include <set>

#include "dasr/binary_io.h"
#include "dasr/error.h"
#include "json.hpp"

namespace dasr::pipeline {

using json = nlohmann::ordered_json;

namespace {

const std::set<std::string> kRecipes = {"constant", "baseline", "scratch", "L", "HL"};

void CheckKeys(const json& j, std::initializer_list<const char*> allowed, const std::string& section) {
  if (!j.is_object()) throw Error(ErrorCode::kConfig, section + " must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!ok.count(key)) throw Error(ErrorCode::kConfig, "unknown key " + section + "." + key);
  }
}

template <typename T>
void Get(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) out = it->get<T>();
}

json AsrJson(const asr::AsrConfig& c) { return json::parse(c.ToMetadata().at("asr_config")); }

}  // namespace

ExperimentConfig ExperimentConfig::Preset(const std::string& name) {
  ExperimentConfig c;
  c.preset = name;
  if (name == "desk") {
    c.asr = asr::AsrConfig::Desk();
  } else if (name == "paper") {
    c.asr = asr::AsrConfig::Paper();
  } else {
    throw Error(ErrorCode::kConfig, "unknown preset '" + name + "' (expected desk or paper)");
  }
  c.dsp.n_mels = c.asr.n_mels;
  return c;
}

void ExperimentConfig::Validate() const {
  dsp.Validate(16000);
  asr.Validate(false);
  if (asr.n_mels != dsp.n_mels) throw Error(ErrorCode::kConfig, "asr.n_mels must equal dsp.n_mels");
  SyntheticCorpusSpec s = synth;
  s.seed = seed;
  s.Validate();
  if (train_asr.epochs < 0 || train_asr.eval_every < 1 || train_asr.keep_checkpoints < 1) {
    throw Error(ErrorCode::kConfig, "train_asr needs epochs >= 0, eval_every >= 1, keep_checkpoints >= 1");
  }
  finetune.head.Validate();
  if (finetune.epochs < 1) throw Error(ErrorCode::kConfig, "finetune.epochs must be >= 1");
  if (augment.copies < 0) throw Error(ErrorCode::kConfig, "augment.copies must be >= 0");
  if (cv.k < 2 || cv.n_boot < 1 || !(cv.level > 0.0 && cv.level < 1.0)) {
    throw Error(ErrorCode::kConfig, "cv needs k >= 2, n_boot >= 1, level in (0, 1)");
  }
  if (!kRecipes.count(cv.recipe)) throw Error(ErrorCode::kConfig, "unknown recipe '" + cv.recipe + "'");
}

std::string ExperimentConfig::ToJson() const {
  json j;
  j["preset"] = preset;
  j["seed"] = seed;
  j["dsp"] = {{"frame_length_ms", dsp.frame_length_ms}, {"frame_hop_ms", dsp.frame_hop_ms},
              {"n_mels", dsp.n_mels},                   {"fft_size", dsp.fft_size},
              {"mel_low_hz", dsp.mel_low_hz},           {"mel_high_hz", dsp.mel_high_hz},
              {"log_floor", dsp.log_floor},             {"delta_window", dsp.delta_window},
              {"preemphasis", dsp.preemphasis},         {"normalize", dsp.normalize}};
  j["asr"] = AsrJson(asr);
  j["synth"] = {{"n_speakers", synth.n_speakers},
                {"n_dementia", synth.n_dementia},
                {"utterances_per_speaker", synth.utterances_per_speaker},
                {"dev_utterances_per_speaker", synth.dev_utterances_per_speaker},
                {"vocab_size", synth.vocab_size},
                {"min_tokens", synth.min_tokens},
                {"max_tokens", synth.max_tokens},
                {"segment_tokens", synth.segment_tokens},
                {"delta", synth.delta}};
  j["train_asr"] = {{"epochs", train_asr.epochs},
                    {"eval_every", train_asr.eval_every},
                    {"keep_checkpoints", train_asr.keep_checkpoints},
                    {"clip_norm", train_asr.clip_norm},
                    {"rho", train_asr.optimizer.rho},
                    {"eps", train_asr.optimizer.eps},
                    {"lr", train_asr.optimizer.lr},
                    {"target_train_cer", train_asr.target_train_cer ? json(*train_asr.target_train_cer) : json()}};
  j["finetune"] = {{"freeze", std::string(transfer::FreezeVariantName(finetune.freeze))},
                   {"task", finetune.head.task == transfer::HeadTask::kClassification ? "classification" : "regression"},
                   {"pooling", std::string(transfer::PoolingName(finetune.head.pooling))},
                   {"threshold", finetune.head.threshold},
                   {"score", std::string(transfer::ScoreKindName(finetune.head.score))},
                   {"epochs", finetune.epochs},
                   {"clip_norm", finetune.clip_norm}};
  const auto& r = augment.ranges;
  j["augment"] = {{"copies", augment.copies},
                  {"snr_db", {r.snr_db_min, r.snr_db_max}},
                  {"shift_ms", {r.shift_ms_min, r.shift_ms_max}},
                  {"rate", {r.rate_min, r.rate_max}},
                  {"semitones", {r.semitones_min, r.semitones_max}}};
  j["cv"] = {{"k", cv.k}, {"n_boot", cv.n_boot}, {"level", cv.level}, {"recipe", cv.recipe}};
  j["paths"] = {{"corpus", paths.corpus},
                {"features", paths.features},
                {"checkpoints", paths.checkpoints},
                {"reports", paths.reports}};
  return j.dump(2) + "\n";
}

ExperimentConfig ExperimentConfig::FromJson(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("config is not valid JSON: ") + e.what());
  }
  try {
    CheckKeys(j, {"preset", "seed", "dsp", "asr", "synth", "train_asr", "finetune", "augment", "cv", "paths"}, "config");
    ExperimentConfig c = Preset(j.value("preset", std::string("desk")));
    Get(j, "seed", c.seed);
    if (auto d = j.find("dsp"); d != j.end()) {
      CheckKeys(*d, {"frame_length_ms", "frame_hop_ms", "n_mels", "fft_size", "mel_low_hz", "mel_high_hz",
                     "log_floor", "delta_window", "preemphasis", "normalize"},
                "dsp");
      Get(*d, "frame_length_ms", c.dsp.frame_length_ms);
      Get(*d, "frame_hop_ms", c.dsp.frame_hop_ms);
      Get(*d, "n_mels", c.dsp.n_mels);
      Get(*d, "fft_size", c.dsp.fft_size);
      Get(*d, "mel_low_hz", c.dsp.mel_low_hz);
      Get(*d, "mel_high_hz", c.dsp.mel_high_hz);
      Get(*d, "log_floor", c.dsp.log_floor);
      Get(*d, "delta_window", c.dsp.delta_window);
      Get(*d, "preemphasis", c.dsp.preemphasis);
      Get(*d, "normalize", c.dsp.normalize);
    }
    if (auto a = j.find("asr"); a != j.end()) {
      json merged = AsrJson(c.asr);
      CheckKeys(*a, {"n_mels", "vgg_channels1", "vgg_channels2", "n_blstm_layers", "hidden", "decoder_layers",
                     "decoder_hidden", "embed_dim", "att_conv_channels", "att_conv_kernel", "att_dim", "vocab_size",
                     "init_scale"},
                "asr");
      for (const auto& [key, value] : a->items()) merged[key] = value;
      c.asr = asr::AsrConfig::FromMetadata({{"asr_config", merged.dump()}}, false);
    }
    if (auto s = j.find("synth"); s != j.end()) {
      CheckKeys(*s, {"n_speakers", "n_dementia", "utterances_per_speaker", "dev_utterances_per_speaker", "vocab_size",
                     "min_tokens", "max_tokens", "segment_tokens", "delta"},
                "synth");
      Get(*s, "n_speakers", c.synth.n_speakers);
      Get(*s, "n_dementia", c.synth.n_dementia);
      Get(*s, "utterances_per_speaker", c.synth.utterances_per_speaker);
      Get(*s, "dev_utterances_per_speaker", c.synth.dev_utterances_per_speaker);
      Get(*s, "vocab_size", c.synth.vocab_size);
      Get(*s, "min_tokens", c.synth.min_tokens);
      Get(*s, "max_tokens", c.synth.max_tokens);
      Get(*s, "segment_tokens", c.synth.segment_tokens);
      Get(*s, "delta", c.synth.delta);
    }
    if (auto t = j.find("train_asr"); t != j.end()) {
      CheckKeys(*t, {"epochs", "eval_every", "keep_checkpoints", "clip_norm", "rho", "eps", "lr", "target_train_cer"},
                "train_asr");
      Get(*t, "epochs", c.train_asr.epochs);
      Get(*t, "eval_every", c.train_asr.eval_every);
      Get(*t, "keep_checkpoints", c.train_asr.keep_checkpoints);
      Get(*t, "clip_norm", c.train_asr.clip_norm);
      Get(*t, "rho", c.train_asr.optimizer.rho);
      Get(*t, "eps", c.train_asr.optimizer.eps);
      Get(*t, "lr", c.train_asr.optimizer.lr);
      if (auto cer = t->find("target_train_cer"); cer != t->end()) {
        c.train_asr.target_train_cer = cer->is_null() ? std::nullopt : std::optional<double>(cer->get<double>());
      }
    }
    if (auto f = j.find("finetune"); f != j.end()) {
      CheckKeys(*f, {"freeze", "task", "pooling", "threshold", "score", "epochs", "clip_norm"}, "finetune");
      if (f->contains("freeze")) c.finetune.freeze = transfer::ParseFreezeVariant(f->at("freeze").get<std::string>());
      if (f->contains("task")) {
        const std::string task = f->at("task");
        if (task != "classification" && task != "regression") {
          throw Error(ErrorCode::kConfig, "finetune.task must be classification or regression");
        }
        c.finetune.head.task =
            task == "classification" ? transfer::HeadTask::kClassification : transfer::HeadTask::kRegression;
      }
      if (f->contains("pooling")) c.finetune.head.pooling = transfer::ParsePooling(f->at("pooling").get<std::string>());
      Get(*f, "threshold", c.finetune.head.threshold);
      if (f->contains("score")) c.finetune.head.score = transfer::ParseScoreKind(f->at("score").get<std::string>());
      Get(*f, "epochs", c.finetune.epochs);
      Get(*f, "clip_norm", c.finetune.clip_norm);
    }
    if (auto a = j.find("augment"); a != j.end()) {
      CheckKeys(*a, {"copies", "snr_db", "shift_ms", "rate", "semitones"}, "augment");
      Get(*a, "copies", c.augment.copies);
      auto range = [&](const char* key, double& lo, double& hi) {
        if (auto it = a->find(key); it != a->end()) {
          const auto v = it->get<std::vector<double>>();
          if (v.size() != 2 || v[0] > v[1]) throw Error(ErrorCode::kConfig, std::string("augment.") + key + " must be [lo, hi]");
          lo = v[0];
          hi = v[1];
        }
      };
      auto& r = c.augment.ranges;
      range("snr_db", r.snr_db_min, r.snr_db_max);
      range("shift_ms", r.shift_ms_min, r.shift_ms_max);
      range("rate", r.rate_min, r.rate_max);
      range("semitones", r.semitones_min, r.semitones_max);
    }
    if (auto v = j.find("cv"); v != j.end()) {
      CheckKeys(*v, {"k", "n_boot", "level", "recipe"}, "cv");
      Get(*v, "k", c.cv.k);
      Get(*v, "n_boot", c.cv.n_boot);
      Get(*v, "level", c.cv.level);
      Get(*v, "recipe", c.cv.recipe);
    }
    if (auto p = j.find("paths"); p != j.end()) {
      CheckKeys(*p, {"corpus", "features", "checkpoints", "reports"}, "paths");
      Get(*p, "corpus", c.paths.corpus);
      Get(*p, "features", c.paths.features);
      Get(*p, "checkpoints", c.paths.checkpoints);
      Get(*p, "reports", c.paths.reports);
    }
    c.Validate();
    return c;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("bad config value: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kConfig) throw;
    throw Error(ErrorCode::kConfig, e.what());
  }
}

ExperimentConfig ExperimentConfig::Load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::kDependency, "config file not found: " + path.string());
  return FromJson(ReadTextFile(path));
}

void ExperimentConfig::Save(const std::filesystem::path& path) const { WriteTextFile(path, ToJson()); }

std::string ExperimentConfig::Hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : ToJson()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace dasr::pipeline
