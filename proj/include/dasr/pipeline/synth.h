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

#ifndef DASR_PIPELINE_SYNTH_H_
#define DASR_PIPELINE_SYNTH_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dasr/audio/wav.h"

namespace dasr::pipeline {

// Tone-word corpus. Each token is a harmonic complex with its own f0 and
// formant; a speaker's spectral tilt (dB/octave) is lowered by delta times
// a severity in [0, 1], and severity also drives the clinical scores.
struct SyntheticCorpusSpec {
  int n_speakers = 20;
  int n_dementia = 10;
  int utterances_per_speaker = 5;
  int dev_utterances_per_speaker = 0;
  int vocab_size = 6;
  int min_tokens = 3;
  int max_tokens = 5;
  // Tokens in each subject's long picture-description stand-in segment.
  int segment_tokens = 10;
  double delta = 6.0;
  std::uint64_t seed = 1;

  // Throws kConfig.
  void Validate() const;
};

struct SynthUtterance {
  std::string id;
  std::string speaker;
  std::string transcript;
  audio::AudioBuffer audio;
};

struct SynthSubject {
  std::string id;
  int label = 0;  // 1 = dementia
  double severity = 0.0;
  double mmse = 0.0;
  double cdr = 0.0;
  double cdr_sob = 0.0;
  audio::AudioBuffer audio;
};

struct SyntheticCorpus {
  std::vector<SynthUtterance> asr_train;
  std::vector<SynthUtterance> asr_dev;
  std::vector<SynthSubject> subjects;
};

// Tone-word rendering of `tokens` (ids in [0, vocab_size)) by a neutral
// speaker; transcript letter for token k is 'a' + k.
audio::AudioBuffer SynthesizeTokens(std::span<const int> tokens, int vocab_size, std::uint64_t seed);

SyntheticCorpus GenerateCorpus(const SyntheticCorpusSpec& spec);

// Writes wav/<id>.wav plus asr_train.jsonl, asr_dev.jsonl and subjects.jsonl
// (wav paths relative to `dir`). Unwritable paths raise kIo.
void WriteCorpus(const SyntheticCorpus& corpus, const std::filesystem::path& dir);

}  // namespace dasr::pipeline

#endif  // DASR_PIPELINE_SYNTH_H_
