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

#include "dasr/pipeline/commands.h"

#include <cstdio>
#include <random>
#include <sstream>

#include "dasr/ad/checkpoint.h"
#include "dasr/asr/cer.h"
#include "dasr/audio/augment.h"
#include "dasr/baseline/linear_svm.h"
#include "dasr/binary_io.h"
#include "dasr/error.h"
#include "dasr/eval/report.h"
#include "json.hpp"

namespace dasr::pipeline {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using transfer::HeadTask;
using transfer::SubjectSample;

namespace {

fs::path Resolve(const RunContext& ctx, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : ctx.out / path;
}

void Log(const RunContext& ctx, const std::string& line) {
  if (ctx.log) *ctx.log << line << "\n" << std::flush;
}

void CreateDirs(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
}

std::vector<json> ReadJsonLines(const fs::path& path) {
  RequireFile(path, "manifest");
  std::vector<json> out;
  std::istringstream in(ReadTextFile(path));
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kFormat, path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

std::map<std::string, std::string> Stamp(const RunContext& ctx) {
  return {{"config_hash", ctx.config.Hash()}, {"seed", std::to_string(ctx.config.seed)}};
}

ad::Checkpoint LoadAsrCheckpoint(const RunContext& ctx) {
  RequireFile(AsrCheckpointPath(ctx), "ASR checkpoint (run train-asr first)");
  return ad::LoadCheckpoint(AsrCheckpointPath(ctx));
}

class TransferPredictor : public eval::Predictor {
 public:
  explicit TransferPredictor(transfer::TransferModel m) : m_(std::move(m)) {}
  double Predict(const SubjectSample& s) const override {
    if (m_.head.task == HeadTask::kClassification) return transfer::Classify(m_, s.features).probability;
    return transfer::ClampScore(m_.head.score, transfer::PredictScore(m_, s.features));
  }

 private:
  transfer::TransferModel m_;
};

}  // namespace

fs::path CorpusDir(const RunContext& ctx) { return Resolve(ctx, ctx.config.paths.corpus); }
fs::path CheckpointDir(const RunContext& ctx) { return Resolve(ctx, ctx.config.paths.checkpoints); }
fs::path ReportDir(const RunContext& ctx) { return Resolve(ctx, ctx.config.paths.reports); }
fs::path AsrCheckpointPath(const RunContext& ctx) { return CheckpointDir(ctx) / "asr.ckpt"; }
fs::path HeadCheckpointPath(const RunContext& ctx) { return CheckpointDir(ctx) / "head.ckpt"; }
fs::path ReportPath(const RunContext& ctx, const std::string& recipe) {
  return ReportDir(ctx) / ("eval_" + recipe + ".json");
}

void RequireFile(const fs::path& path, const std::string& what) {
  if (!fs::exists(path)) throw Error(ErrorCode::kDependency, "missing " + what + ": " + path.string());
}

std::vector<ManifestEntry> ReadAsrManifest(const fs::path& path) {
  std::vector<ManifestEntry> out;
  for (const json& j : ReadJsonLines(path)) {
    try {
      out.push_back({j.at("id"), j.at("wav"), j.at("transcript"), j.value("speaker", std::string())});
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kFormat, path.string() + ": " + e.what());
    }
  }
  return out;
}

std::vector<SubjectSample> LoadSubjects(const fs::path& corpus_dir, const audio::DspConfig& dsp) {
  std::vector<SubjectSample> out;
  const fs::path manifest = corpus_dir / "subjects.jsonl";
  for (const json& j : ReadJsonLines(manifest)) {
    SubjectSample s;
    try {
      s.id = j.at("id");
      s.label = j.at("label");
      s.mmse = j.at("mmse");
      s.cdr = j.at("cdr");
      s.cdr_sob = j.at("cdr_sob");
      const fs::path wav = corpus_dir / j.at("wav").get<std::string>();
      RequireFile(wav, "subject audio");
      s.audio = audio::ReadWavFile(wav);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kFormat, manifest.string() + ": " + e.what());
    }
    s.features = audio::ComputeFeatures(s.audio, dsp);
    out.push_back(std::move(s));
  }
  if (out.empty()) throw Error(ErrorCode::kDegenerateData, "no subjects in " + manifest.string());
  return out;
}

TransferRecipe::TransferRecipe(std::optional<ad::Checkpoint> encoder, const ExperimentConfig& config)
    : encoder_(std::move(encoder)), config_(config) {
  if (encoder_) *encoder_ = transfer::ExtractEncoder(*encoder_);
}

std::string TransferRecipe::Name() const {
  if (!encoder_) return "scratch";
  return config_.finetune.freeze == transfer::FreezeVariant::kL ? "-L" : "-H-L";
}

transfer::TransferModel TransferRecipe::Train(std::span<const SubjectSample> train, std::uint64_t seed) const {
  const auto& ft = config_.finetune;
  transfer::TransferModel model = encoder_ ? transfer::MakeTransferModel(*encoder_, ft.head, ft.freeze, seed)
                                           : transfer::MakeScratchModel(config_.asr, ft.head, seed);
  std::vector<SubjectSample> samples(train.begin(), train.end());
  if (ft.head.task == HeadTask::kRegression && config_.augment.copies > 0) {
    std::mt19937_64 rng(seed ^ 0xA06E47ULL);
    for (const auto& s : train) {
      for (int c = 0; c < config_.augment.copies; ++c) {
        SubjectSample copy = s;
        copy.id = s.id + "#aug" + std::to_string(c);
        copy.audio = audio::ApplyAugment(s.audio, audio::SampleAugmentSpec(config_.augment.ranges, rng));
        copy.features = audio::ComputeFeatures(copy.audio, config_.dsp);
        samples.push_back(std::move(copy));
      }
    }
  }
  transfer::FinetuneOptions o;
  o.epochs = ft.epochs;
  o.seed = seed;
  o.clip_norm = ft.clip_norm;
  transfer::Finetune(model, samples, o);
  return model;
}

std::unique_ptr<eval::Predictor> TransferRecipe::Fit(std::span<const SubjectSample> train, std::uint64_t seed) const {
  return std::make_unique<TransferPredictor>(Train(train, seed));
}

std::unique_ptr<eval::Recipe> MakeRecipe(const RunContext& ctx) {
  const ExperimentConfig& c = ctx.config;
  const std::string& r = c.cv.recipe;
  if (r == "constant") return std::make_unique<eval::ConstantRecipe>(c.finetune.head.task, c.finetune.head.score);
  if (r == "baseline") {
    if (c.finetune.head.task != HeadTask::kClassification) {
      throw Error(ErrorCode::kConfig, "the baseline recipe is a classifier");
    }
    return std::make_unique<baseline::BaselineSvmRecipe>();
  }
  if (r == "scratch") return std::make_unique<TransferRecipe>(std::nullopt, c);
  ExperimentConfig variant = c;
  variant.finetune.freeze = r == "L" ? transfer::FreezeVariant::kL : transfer::FreezeVariant::kHL;
  return std::make_unique<TransferRecipe>(LoadAsrCheckpoint(ctx), variant);
}

void CmdSynth(const RunContext& ctx) {
  SyntheticCorpusSpec spec = ctx.config.synth;
  spec.seed = ctx.config.seed;
  const fs::path dir = CorpusDir(ctx);
  CreateDirs(dir);
  const SyntheticCorpus corpus = GenerateCorpus(spec);
  WriteCorpus(corpus, dir);
  json meta = {{"config_hash", ctx.config.Hash()},
               {"seed", ctx.config.seed},
               {"asr_train", corpus.asr_train.size()},
               {"asr_dev", corpus.asr_dev.size()},
               {"subjects", corpus.subjects.size()}};
  WriteTextFile(dir / "meta.json", meta.dump(2) + "\n");
  Log(ctx, "synth: " + std::to_string(corpus.asr_train.size()) + " training utterances, " +
               std::to_string(corpus.subjects.size()) + " subjects -> " + dir.string());
}

std::vector<fs::path> CmdFeaturize(const RunContext& ctx, std::span<const fs::path> wavs) {
  std::vector<fs::path> inputs(wavs.begin(), wavs.end());
  if (inputs.empty()) {
    const fs::path dir = CorpusDir(ctx);
    for (const char* name : {"asr_train.jsonl", "asr_dev.jsonl"}) {
      for (const auto& e : ReadAsrManifest(dir / name)) inputs.push_back(dir / e.wav);
    }
    for (const json& j : ReadJsonLines(dir / "subjects.jsonl")) inputs.push_back(dir / j.at("wav").get<std::string>());
  }
  const fs::path out_dir = Resolve(ctx, ctx.config.paths.features);
  CreateDirs(out_dir);
  std::vector<fs::path> written;
  for (const auto& wav : inputs) {
    RequireFile(wav, "audio file");
    const fs::path target = out_dir / (wav.stem().string() + ".feat");
    audio::WriteFeatureFile(target, audio::ComputeFeatures(audio::ReadWavFile(wav), ctx.config.dsp));
    written.push_back(target);
  }
  json meta = {{"config_hash", ctx.config.Hash()}, {"seed", ctx.config.seed}, {"files", written.size()}};
  WriteTextFile(out_dir / "meta.json", meta.dump(2) + "\n");
  Log(ctx, "featurize: " + std::to_string(written.size()) + " files -> " + out_dir.string());
  return written;
}

asr::TrainAsrResult CmdTrainAsr(const RunContext& ctx) {
  const ExperimentConfig& c = ctx.config;
  const fs::path dir = CorpusDir(ctx);
  const auto train_entries = ReadAsrManifest(dir / "asr_train.jsonl");
  const fs::path dev_manifest = dir / "asr_dev.jsonl";
  const auto dev_entries = fs::exists(dev_manifest) ? ReadAsrManifest(dev_manifest) : std::vector<ManifestEntry>{};
  std::vector<std::string> transcripts;
  for (const auto& e : train_entries) transcripts.push_back(e.transcript);
  const asr::Tokenizer tokenizer = asr::Tokenizer::FromTranscripts(transcripts);
  auto load = [&](const std::vector<ManifestEntry>& entries) {
    std::vector<asr::AsrExample> out;
    for (const auto& e : entries) {
      RequireFile(dir / e.wav, "utterance audio");
      out.push_back(asr::MakeExample(tokenizer, e.id, audio::ComputeFeatures(audio::ReadWavFile(dir / e.wav), c.dsp),
                                     e.transcript));
    }
    return out;
  };
  const auto train = load(train_entries);
  const auto dev = load(dev_entries);

  asr::AsrConfig config = c.asr;
  config.vocab_size = tokenizer.vocab_size();
  asr::AsrModel model = asr::InitAsrModel(config, tokenizer, c.seed);
  std::vector<const audio::FeatureMatrix*> feats;
  for (const auto& ex : train) feats.push_back(&ex.features);
  asr::SetCmvn(model.params, feats);

  CreateDirs(CheckpointDir(ctx));
  CreateDirs(ReportDir(ctx));
  std::string log_lines = json({{"config_hash", c.Hash()}, {"seed", c.seed}}).dump() + "\n";
  asr::TrainAsrOptions o;
  o.epochs = c.train_asr.epochs;
  o.seed = c.seed;
  o.clip_norm = c.train_asr.clip_norm;
  o.optimizer = c.train_asr.optimizer;
  o.eval_every = c.train_asr.eval_every;
  o.checkpoint_dir = CheckpointDir(ctx) / "asr_epochs";
  o.keep_checkpoints = c.train_asr.keep_checkpoints;
  o.resume = ctx.resume;
  o.target_train_cer = c.train_asr.target_train_cer;
  o.metadata = Stamp(ctx);
  o.on_epoch = [&](const asr::EpochLog& e) {
    json j = {{"epoch", e.epoch}, {"split", e.split}, {"loss", e.loss}};
    if (e.cer) j["cer"] = *e.cer;
    log_lines += j.dump() + "\n";
    char buf[128];
    std::snprintf(buf, sizeof(buf), "train-asr: epoch %d %s loss %.4f", e.epoch, e.split.c_str(), e.loss);
    std::string line = buf;
    if (e.cer) {
      std::snprintf(buf, sizeof(buf), " cer %.4f", *e.cer);
      line += buf;
    }
    Log(ctx, line);
  };
  const asr::TrainAsrResult result = asr::TrainAsr(model, train, dev, o);
  ad::Checkpoint ckpt = asr::ToCheckpoint(model);
  for (const auto& [k, v] : Stamp(ctx)) ckpt.metadata[k] = v;
  ckpt.metadata["epochs"] = std::to_string(result.last_epoch);
  ad::SaveCheckpoint(AsrCheckpointPath(ctx), ckpt);
  WriteTextFile(ReportDir(ctx) / "train_asr.jsonl", log_lines);
  Log(ctx, "train-asr: wrote " + AsrCheckpointPath(ctx).string());
  return result;
}

void CmdFinetune(const RunContext& ctx) {
  const ExperimentConfig& c = ctx.config;
  std::optional<ad::Checkpoint> encoder;
  if (c.finetune.freeze != transfer::FreezeVariant::kNone) encoder = LoadAsrCheckpoint(ctx);
  const auto subjects = LoadSubjects(CorpusDir(ctx), c.dsp);
  const TransferRecipe recipe(std::move(encoder), c);
  const transfer::TransferModel model = recipe.Train(subjects, c.seed);
  ad::Checkpoint ckpt = transfer::ToCheckpoint(model);
  for (const auto& [k, v] : Stamp(ctx)) ckpt.metadata[k] = v;
  CreateDirs(CheckpointDir(ctx));
  ad::SaveCheckpoint(HeadCheckpointPath(ctx), ckpt);
  Log(ctx, "finetune: " + recipe.Name() + " on " + std::to_string(subjects.size()) + " subjects -> " +
               HeadCheckpointPath(ctx).string());
}

eval::EvalReport CmdEval(const RunContext& ctx) {
  const ExperimentConfig& c = ctx.config;
  const auto recipe = MakeRecipe(ctx);
  const auto subjects = LoadSubjects(CorpusDir(ctx), c.dsp);
  eval::CvOptions o;
  o.k = c.cv.k;
  o.seed = c.seed;
  o.n_boot = c.cv.n_boot;
  o.level = c.cv.level;
  o.task = c.finetune.head.task;
  o.score = c.finetune.head.score;
  o.threshold = c.finetune.head.threshold;
  eval::EvalReport report = eval::RunCv(subjects, *recipe, o);
  report.config_hash = c.Hash();
  CreateDirs(ReportDir(ctx));
  const fs::path path = ReportPath(ctx, c.cv.recipe);
  WriteTextFile(path, eval::ReportToJson(report));
  const std::vector<eval::EvalReport> rows = {report};
  WriteTextFile(path.parent_path() / (path.stem().string() + ".txt"), eval::ReportTable(rows));
  for (const auto& f : report.folds) {
    if (!f.ok) Log(ctx, "eval: fold " + std::to_string(f.index) + " failed: " + f.error);
  }
  Log(ctx, "eval: " + report.recipe + " -> " + path.string());
  return report;
}

double CmdCer(const fs::path& ref, const fs::path& hyp) {
  RequireFile(ref, "reference transcripts");
  RequireFile(hyp, "hypothesis transcripts");
  auto lines = [](const fs::path& p) {
    std::vector<std::string> out;
    std::istringstream in(ReadTextFile(p));
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      out.push_back(line);
    }
    return out;
  };
  const auto r = lines(ref), h = lines(hyp);
  if (r.size() != h.size()) {
    throw Error(ErrorCode::kShape, "reference has " + std::to_string(r.size()) + " lines, hypothesis " +
                                       std::to_string(h.size()));
  }
  asr::CerAccumulator acc;
  for (std::size_t i = 0; i < r.size(); ++i) acc.Add(r[i], h[i]);
  return acc.Value();
}

std::vector<fs::path> CmdExportPlots(const fs::path& report, const fs::path& out_dir) {
  RequireFile(report, "evaluation report");
  const eval::ReportPredictions rp = eval::PredictionsFromJson(ReadTextFile(report));
  CreateDirs(out_dir);
  std::vector<fs::path> written;
  if (rp.task == HeadTask::kClassification) {
    written.push_back(out_dir / "roc.csv");
    WriteTextFile(written.back(), eval::RocCsv(rp.predictions));
  }
  written.push_back(out_dir / "scatter.csv");
  WriteTextFile(written.back(), eval::ScatterCsv(rp.predictions));
  return written;
}

}  // namespace dasr::pipeline
