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

// dasr: synth | featurize | train-asr | finetune | eval | cer | export-plots

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dasr/error.h"
#include "dasr/eval/report.h"
#include "dasr/pipeline/commands.h"
#include "dasr/pipeline/config.h"

namespace fs = std::filesystem;
using dasr::pipeline::ExperimentConfig;
using dasr::pipeline::RunContext;

namespace {

struct GlobalFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string preset;
};

ExperimentConfig ResolveConfig(const GlobalFlags& g) {
  ExperimentConfig c;
  if (!g.config.empty()) {
    c = ExperimentConfig::Load(g.config);
    if (!g.preset.empty() && g.preset != c.preset) {
      throw dasr::Error(dasr::ErrorCode::kConfig,
                        "--preset " + g.preset + " conflicts with preset '" + c.preset + "' in " + g.config);
    }
  } else {
    c = ExperimentConfig::Preset(g.preset.empty() ? "desk" : g.preset);
  }
  if (g.seed) c.seed = *g.seed;
  c.Validate();
  return c;
}

RunContext MakeContext(const GlobalFlags& g) {
  RunContext ctx;
  ctx.config = ResolveConfig(g);
  if (!g.out.empty()) {
    ctx.out = g.out;
  } else if (const char* env = std::getenv("DASR_OUT"); env && *env) {
    ctx.out = env;
  }
  ctx.log = &std::cerr;
  std::error_code ec;
  fs::create_directories(ctx.out, ec);
  if (ec) throw dasr::Error(dasr::ErrorCode::kIo, "cannot create " + ctx.out.string() + ": " + ec.message());
  ctx.config.Save(ctx.out / "config.json");
  return ctx;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dementia detection from speech via transferred ASR encoders"};
  app.require_subcommand(1);
  GlobalFlags g;
  app.add_option("--config", g.config, "Experiment config (JSON)");
  app.add_option("--seed", g.seed, "Seed overriding the config");
  app.add_option("--out", g.out, "Output directory (default $DASR_OUT, else .)");
  app.add_option("--preset", g.preset, "Base preset when no config is given")->check(CLI::IsMember({"desk", "paper"}));

  auto* synth = app.add_subcommand("synth", "Generate the synthetic tone-word corpus");

  std::vector<std::string> wavs;
  auto* featurize = app.add_subcommand("featurize", "Write feature files (default: every corpus wav)");
  featurize->add_option("wav", wavs, "Input wav files");

  bool resume = false;
  auto* train_asr = app.add_subcommand("train-asr", "Train the attention ASR model");
  train_asr->add_flag("--resume", resume, "Continue from the last epoch checkpoint");

  std::string freeze;
  auto* finetune = app.add_subcommand("finetune", "Fine-tune a detection or score head on all subjects");
  finetune->add_option("--freeze", freeze, "L, HL or none (overrides the config)");

  std::string recipe;
  auto* eval = app.add_subcommand("eval", "Stratified cross-validation report");
  eval->add_option("--recipe", recipe, "constant, baseline, scratch, L or HL (overrides the config)");

  std::string ref, hyp;
  auto* cer = app.add_subcommand("cer", "Corpus character error rate of line-aligned files");
  cer->add_option("ref", ref, "Reference transcripts")->required();
  cer->add_option("hyp", hyp, "Hypothesis transcripts")->required();

  std::string report;
  auto* plots = app.add_subcommand("export-plots", "ROC and scatter CSVs from an eval report");
  plots->add_option("--report", report, "Report path (default: the configured recipe's report)");

  auto* show = app.add_subcommand("config", "Print the resolved config");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cer->parsed()) {
      std::printf("%.4f\n", dasr::pipeline::CmdCer(ref, hyp));
      return 0;
    }
    if (show->parsed()) {
      std::cout << ResolveConfig(g).ToJson();
      return 0;
    }
    RunContext ctx = MakeContext(g);
    if (synth->parsed()) {
      dasr::pipeline::CmdSynth(ctx);
    } else if (featurize->parsed()) {
      const std::vector<fs::path> paths(wavs.begin(), wavs.end());
      dasr::pipeline::CmdFeaturize(ctx, paths);
    } else if (train_asr->parsed()) {
      ctx.resume = resume;
      const auto result = dasr::pipeline::CmdTrainAsr(ctx);
      if (result.final_train_cer) std::printf("train CER %.4f\n", *result.final_train_cer);
    } else if (finetune->parsed()) {
      if (!freeze.empty()) ctx.config.finetune.freeze = dasr::transfer::ParseFreezeVariant(freeze);
      dasr::pipeline::CmdFinetune(ctx);
    } else if (eval->parsed()) {
      if (!recipe.empty()) {
        ctx.config.cv.recipe = recipe;
        ctx.config.Validate();
      }
      const auto r = dasr::pipeline::CmdEval(ctx);
      const std::vector<dasr::eval::EvalReport> rows = {r};
      std::cout << dasr::eval::ReportTable(rows);
      if (!r.complete) return 1;
    } else if (plots->parsed()) {
      const fs::path path = report.empty() ? dasr::pipeline::ReportPath(ctx, ctx.config.cv.recipe) : fs::path(report);
      for (const auto& p : dasr::pipeline::CmdExportPlots(path, ctx.out / "plots")) std::cout << p.string() << "\n";
    }
  } catch (const dasr::Error& e) {
    std::fprintf(stderr, "dasr: %s error: %s\n", std::string(dasr::ErrorCodeName(e.code())).c_str(), e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "dasr: error: %s\n", e.what());
    return 1;
  }
  return 0;
}
