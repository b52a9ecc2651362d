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

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dasr/binary_io.h"
#include "dasr/error.h"
#include "dasr/eval/report.h"
#include "dasr/pipeline/commands.h"
#include "dasr/pipeline/config.h"
#include "gtest/gtest.h"

namespace dasr::pipeline {
namespace {

namespace fs = std::filesystem;

fs::path TempDir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("dasr_pipeline_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Subjects only: no ASR utterances, short segments.
RunContext SubjectsOnly(const std::string& name, double delta, int n, int n_dementia) {
  RunContext ctx;
  ctx.config = ExperimentConfig::Preset("desk");
  ctx.config.synth.n_speakers = n;
  ctx.config.synth.n_dementia = n_dementia;
  ctx.config.synth.utterances_per_speaker = 0;
  ctx.config.synth.segment_tokens = 6;
  ctx.config.synth.delta = delta;
  ctx.config.cv.n_boot = 200;
  ctx.out = TempDir(name);
  return ctx;
}

TEST(ConfigTest, PresetsDiffer) {
  const auto desk = ExperimentConfig::Preset("desk");
  const auto paper = ExperimentConfig::Preset("paper");
  EXPECT_EQ(desk.asr.hidden, 32);
  EXPECT_EQ(paper.asr.hidden, 1024);
  EXPECT_EQ(paper.dsp.n_mels, 80);
  EXPECT_NE(desk.Hash(), paper.Hash());
  EXPECT_THROW(ExperimentConfig::Preset("laptop"), Error);
}

TEST(ConfigTest, RoundTripsIdentically) {
  for (const char* preset : {"desk", "paper"}) {
    ExperimentConfig c = ExperimentConfig::Preset(preset);
    c.seed = 77;
    c.finetune.head.task = transfer::HeadTask::kRegression;
    c.finetune.head.score = transfer::ScoreKind::kCdrSob;
    c.train_asr.target_train_cer = 0.05;
    c.augment.copies = 2;
    const std::string once = c.ToJson();
    const ExperimentConfig back = ExperimentConfig::FromJson(once);
    EXPECT_EQ(back.ToJson(), once) << preset;
    EXPECT_EQ(back.Hash(), c.Hash());
    const fs::path file = TempDir("roundtrip") / "c.json";
    back.Save(file);
    EXPECT_EQ(ExperimentConfig::Load(file).ToJson(), once);
  }
}

TEST(ConfigTest, PartialConfigsStartFromTheirPreset) {
  const auto c = ExperimentConfig::FromJson(R"({"preset": "paper", "seed": 9, "cv": {"recipe": "baseline"}})");
  EXPECT_EQ(c.asr.hidden, 1024);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.cv.recipe, "baseline");
  EXPECT_EQ(c.cv.k, 5);
}

TEST(ConfigTest, RejectsUnknownKeysAndBadValues) {
  for (const char* bad : {R"({"sed": 1})", R"({"cv": {"folds": 5}})", R"({"cv": {"recipe": "svm"}})",
                          R"({"dsp": {"n_mels": 64}})", R"({"finetune": {"threshold": 1.5}})", "not json",
                          R"({"augment": {"rate": [1.2, 0.8]}})"}) {
    try {
      ExperimentConfig::FromJson(bad);
      ADD_FAILURE() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kConfig) << bad;
    }
  }
  try {
    ExperimentConfig::Load("/nonexistent/config.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDependency);
  }
}

TEST(SynthCommandTest, SameSpecGivesByteIdenticalCorpus) {
  RunContext a = SubjectsOnly("synth_a", 6.0, 6, 3);
  RunContext b = SubjectsOnly("synth_b", 6.0, 6, 3);
  a.config.synth.utterances_per_speaker = 2;
  b.config.synth.utterances_per_speaker = 2;
  CmdSynth(a);
  CmdSynth(b);
  std::vector<std::string> names;
  for (const auto& e : fs::recursive_directory_iterator(CorpusDir(a))) {
    if (e.is_regular_file()) names.push_back(fs::relative(e.path(), CorpusDir(a)).string());
  }
  EXPECT_GT(names.size(), 10u);
  for (const auto& n : names) EXPECT_EQ(Slurp(CorpusDir(a) / n), Slurp(CorpusDir(b) / n)) << n;
  EXPECT_NE(Slurp(CorpusDir(a) / "meta.json").find(a.config.Hash()), std::string::npos);
}

TEST(SynthCommandTest, UnwritableOutputIsAnIoError) {
  RunContext ctx = SubjectsOnly("unwritable", 6.0, 4, 2);
  const fs::path blocker = ctx.out / "file";
  std::ofstream(blocker) << "x";
  ctx.config.paths.corpus = "file/corpus";
  try {
    CmdSynth(ctx);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
  }
}

TEST(EvalCommandTest, ConstantRecipeOnThirtyFiftyEight) {
  RunContext ctx = SubjectsOnly("constant", 6.0, 88, 30);
  ctx.config.synth.segment_tokens = 2;
  ctx.config.cv.recipe = "constant";
  CmdSynth(ctx);
  const eval::EvalReport r = CmdEval(ctx);
  ASSERT_TRUE(r.classification);
  EXPECT_NEAR(r.classification->acc, 58.0 / 88.0, 1e-12);
  EXPECT_EQ(r.classification->sen, 0.0);
  EXPECT_EQ(r.classification->spe, 1.0);
  const std::string json = Slurp(ReportPath(ctx, "constant"));
  EXPECT_NE(json.find("\"config_hash\": \"" + ctx.config.Hash() + "\""), std::string::npos);
  EXPECT_TRUE(fs::exists(ReportDir(ctx) / "eval_constant.txt"));
}

TEST(EvalCommandTest, BaselineSeparatesLargeTilt) {
  RunContext ctx = SubjectsOnly("large_delta", 12.0, 20, 10);
  ctx.config.cv.recipe = "baseline";
  CmdSynth(ctx);
  EXPECT_GE(CmdEval(ctx).classification->acc, 0.95);
}

TEST(EvalCommandTest, BaselineIsNearChanceWithoutTilt) {
  RunContext ctx = SubjectsOnly("null_delta", 0.0, 40, 20);
  ctx.config.cv.recipe = "baseline";
  CmdSynth(ctx);
  EXPECT_NEAR(CmdEval(ctx).classification->acc, 0.5, 0.1);
}

TEST(EvalCommandTest, MissingUpstreamNamesTheFile) {
  RunContext ctx = SubjectsOnly("missing", 6.0, 10, 5);
  ctx.config.cv.recipe = "HL";
  CmdSynth(ctx);
  try {
    CmdEval(ctx);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDependency);
    EXPECT_NE(std::string(e.what()).find("asr.ckpt"), std::string::npos);
  }
  ctx.config.cv.recipe = "constant";
  ctx.config.paths.corpus = "nowhere";
  try {
    CmdEval(ctx);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDependency);
    EXPECT_NE(std::string(e.what()).find("subjects.jsonl"), std::string::npos);
  }
}

TEST(CerCommandTest, IdenticalFilesScoreZero) {
  const fs::path dir = TempDir("cer");
  WriteTextFile(dir / "ref.txt", "abc\nbca\n");
  WriteTextFile(dir / "hyp.txt", "abc\nbca\n");
  WriteTextFile(dir / "long.txt", "abcabc\nbcabca\n");
  WriteTextFile(dir / "short.txt", "abc\n");
  EXPECT_EQ(CmdCer(dir / "ref.txt", dir / "hyp.txt"), 0.0);
  EXPECT_EQ(CmdCer(dir / "ref.txt", dir / "long.txt"), 1.0);
  EXPECT_THROW(CmdCer(dir / "ref.txt", dir / "short.txt"), Error);
  EXPECT_THROW(CmdCer(dir / "ref.txt", dir / "absent.txt"), Error);
}

TEST(ExportPlotsTest, WritesRocAndScatter) {
  RunContext ctx = SubjectsOnly("plots", 6.0, 20, 10);
  ctx.config.cv.recipe = "baseline";
  CmdSynth(ctx);
  CmdEval(ctx);
  const auto files = CmdExportPlots(ReportPath(ctx, "baseline"), ctx.out / "plots");
  ASSERT_EQ(files.size(), 2u);
  EXPECT_EQ(Slurp(files[0]).rfind("fpr,tpr\n", 0), 0u);
  std::istringstream scatter(Slurp(files[1]));
  std::string line;
  int rows = 0;
  while (std::getline(scatter, line)) ++rows;
  EXPECT_EQ(rows, 21);
}

TEST(FeaturizeCommandTest, WritesReadableFeatureFiles) {
  RunContext ctx = SubjectsOnly("featurize", 6.0, 4, 2);
  CmdSynth(ctx);
  const auto written = CmdFeaturize(ctx, {});
  ASSERT_EQ(written.size(), 4u);
  const audio::FeatureMatrix f = audio::ReadFeatureFile(written[0]);
  EXPECT_EQ(f.dim(), 3 * ctx.config.dsp.n_mels);
  EXPECT_GT(f.num_frames(), 10);
}

}  // namespace
}  // namespace dasr::pipeline
