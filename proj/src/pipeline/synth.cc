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

#include "dasr/pipeline/synth.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "dasr/binary_io.h"
#include "dasr/error.h"
#include "json.hpp"

namespace dasr::pipeline {

namespace {

constexpr int kRate = 16000;
constexpr double kTokenMs = 120.0;
constexpr double kGapMs = 40.0;
constexpr double kEdgeMs = 50.0;
constexpr double kFadeMs = 10.0;
constexpr double kNoiseStd = 1e-3;
constexpr double kMaxHz = 7000.0;

struct Speaker {
  std::string id;
  int label = 0;
  double severity = 0.0;
  double tilt_db_per_octave = 0.0;
  double f0_scale = 1.0;
  double level = 0.1;
};

double TokenF0(int token) { return 110.0 + 22.0 * token; }
double TokenFormant(int token, int vocab) {
  return 400.0 * std::pow(3400.0 / 400.0, vocab == 1 ? 0.0 : static_cast<double>(token) / (vocab - 1));
}

void AppendSilence(std::vector<float>& out, double ms) {
  out.insert(out.end(), static_cast<std::size_t>(ms * kRate / 1000.0), 0.0f);
}

void AppendToken(std::vector<float>& out, int token, int vocab, const Speaker& sp, std::mt19937_64& rng) {
  const int n = static_cast<int>(kTokenMs * kRate / 1000.0);
  const int fade = static_cast<int>(kFadeMs * kRate / 1000.0);
  const double f0 = TokenF0(token) * sp.f0_scale;
  const double formant = TokenFormant(token, vocab);
  std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * std::numbers::pi);
  std::vector<double> x(static_cast<std::size_t>(n), 0.0);
  for (int h = 1; h * f0 < kMaxHz; ++h) {
    const double f = h * f0;
    const double gain_db = sp.tilt_db_per_octave * std::log2(f / 1000.0) +
                           18.0 * std::exp(-std::pow((f - formant) / (0.25 * formant), 2.0));
    const double amp = std::pow(10.0, gain_db / 20.0);
    const double phase = phase_dist(rng);
    const double w = 2.0 * std::numbers::pi * f / kRate;
    for (int i = 0; i < n; ++i) x[i] += amp * std::sin(w * i + phase);
  }
  double power = 0.0;
  for (double v : x) power += v * v;
  const double scale = sp.level / std::sqrt(power / n);
  for (int i = 0; i < n; ++i) {
    const double env = std::min({1.0, static_cast<double>(i) / fade, static_cast<double>(n - 1 - i) / fade});
    out.push_back(static_cast<float>(x[i] * scale * env));
  }
}

audio::AudioBuffer Render(std::span<const int> tokens, int vocab, const Speaker& sp, std::mt19937_64& rng) {
  std::vector<float> s;
  AppendSilence(s, kEdgeMs);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) AppendSilence(s, kGapMs);
    AppendToken(s, tokens[i], vocab, sp, rng);
  }
  AppendSilence(s, kEdgeMs);
  std::normal_distribution<double> noise(0.0, kNoiseStd);
  for (float& v : s) v = static_cast<float>(std::clamp(v + noise(rng), -1.0, 1.0));
  audio::AudioBuffer a;
  a.samples = std::move(s);
  a.sample_rate_hz = kRate;
  return a;
}

std::string Transcript(std::span<const int> tokens) {
  std::string t;
  for (int k : tokens) t.push_back(static_cast<char>('a' + k));
  return t;
}

std::vector<int> RandomTokens(int count, int vocab, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> tok(0, vocab - 1);
  std::vector<int> t(static_cast<std::size_t>(count));
  for (int& k : t) k = tok(rng);
  return t;
}

double RoundToHalf(double v) { return std::round(v * 2.0) / 2.0; }

// Conventional CDR global from sum of boxes.
double CdrFromSob(double sob) {
  if (sob < 0.5) return 0.0;
  if (sob <= 4.0) return 0.5;
  if (sob <= 9.0) return 1.0;
  if (sob <= 15.5) return 2.0;
  return 3.0;
}

}  // namespace

audio::AudioBuffer SynthesizeTokens(std::span<const int> tokens, int vocab_size, std::uint64_t seed) {
  for (int k : tokens) {
    if (k < 0 || k >= vocab_size) throw Error(ErrorCode::kIndex, "token outside vocabulary");
  }
  std::mt19937_64 rng(seed);
  Speaker neutral;
  neutral.tilt_db_per_octave = -3.0;
  return Render(tokens, vocab_size, neutral, rng);
}

void SyntheticCorpusSpec::Validate() const {
  const bool ok = n_speakers >= 1 && n_dementia >= 0 && n_dementia <= n_speakers && utterances_per_speaker >= 0 &&
                  dev_utterances_per_speaker >= 0 && vocab_size >= 1 && vocab_size <= 26 && min_tokens >= 1 &&
                  max_tokens >= min_tokens && segment_tokens >= 1 && delta >= 0.0 && std::isfinite(delta);
  if (!ok) throw Error(ErrorCode::kConfig, "invalid synthetic corpus parameters");
}

SyntheticCorpus GenerateCorpus(const SyntheticCorpusSpec& spec) {
  spec.Validate();
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // Dementia labels go to a random subset of speakers.
  std::vector<int> labels(static_cast<std::size_t>(spec.n_speakers), 0);
  std::fill_n(labels.begin(), spec.n_dementia, 1);
  std::shuffle(labels.begin(), labels.end(), rng);

  std::vector<Speaker> speakers;
  for (int i = 0; i < spec.n_speakers; ++i) {
    Speaker sp;
    char id[16];
    std::snprintf(id, sizeof(id), "spk%03d", i);
    sp.id = id;
    sp.label = labels[static_cast<std::size_t>(i)];
    sp.severity = sp.label ? 0.55 + 0.45 * unit(rng) : 0.35 * unit(rng);
    sp.tilt_db_per_octave = -3.0 - spec.delta * sp.severity + (unit(rng) - 0.5);
    sp.f0_scale = 0.95 + 0.1 * unit(rng);
    sp.level = 0.1 * std::pow(10.0, (unit(rng) - 0.5) * 6.0 / 20.0);
    speakers.push_back(sp);
  }

  SyntheticCorpus corpus;
  std::uniform_int_distribution<int> length(spec.min_tokens, spec.max_tokens);
  for (const auto& sp : speakers) {
    for (int u = 0; u < spec.utterances_per_speaker + spec.dev_utterances_per_speaker; ++u) {
      const std::vector<int> tokens = RandomTokens(length(rng), spec.vocab_size, rng);
      char id[32];
      std::snprintf(id, sizeof(id), "%s_u%03d", sp.id.c_str(), u);
      SynthUtterance utt{id, sp.id, Transcript(tokens), Render(tokens, spec.vocab_size, sp, rng)};
      (u < spec.utterances_per_speaker ? corpus.asr_train : corpus.asr_dev).push_back(std::move(utt));
    }
  }
  std::normal_distribution<double> jitter(0.0, 1.0);
  for (const auto& sp : speakers) {
    const std::vector<int> tokens = RandomTokens(spec.segment_tokens, spec.vocab_size, rng);
    SynthSubject s;
    s.id = sp.id;
    s.label = sp.label;
    s.severity = sp.severity;
    s.cdr_sob = std::clamp(RoundToHalf(18.0 * sp.severity), 0.0, 18.0);
    s.cdr = CdrFromSob(s.cdr_sob);
    s.mmse = std::clamp(std::round(30.0 - 22.0 * sp.severity + jitter(rng)), 0.0, 30.0);
    s.audio = Render(tokens, spec.vocab_size, sp, rng);
    corpus.subjects.push_back(std::move(s));
  }
  return corpus;
}

void WriteCorpus(const SyntheticCorpus& corpus, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir / "wav", ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create corpus directory " + dir.string() + ": " + ec.message());
  auto write_utts = [&](const std::vector<SynthUtterance>& utts, const char* name) {
    std::string lines;
    for (const auto& u : utts) {
      const std::string rel = "wav/" + u.id + ".wav";
      audio::WriteWavFile(dir / rel, u.audio);
      nlohmann::ordered_json j = {{"id", u.id}, {"wav", rel}, {"transcript", u.transcript}, {"speaker", u.speaker}};
      lines += j.dump() + "\n";
    }
    WriteTextFile(dir / name, lines);
  };
  write_utts(corpus.asr_train, "asr_train.jsonl");
  write_utts(corpus.asr_dev, "asr_dev.jsonl");
  std::string lines;
  for (const auto& s : corpus.subjects) {
    const std::string rel = "wav/" + s.id + "_segment.wav";
    audio::WriteWavFile(dir / rel, s.audio);
    nlohmann::ordered_json j = {{"id", s.id},   {"wav", rel},      {"speaker", s.id},         {"label", s.label},
                                {"mmse", s.mmse}, {"cdr", s.cdr}, {"cdr_sob", s.cdr_sob}};
    lines += j.dump() + "\n";
  }
  WriteTextFile(dir / "subjects.jsonl", lines);
}

}  // namespace dasr::pipeline
