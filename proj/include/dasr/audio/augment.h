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

#ifndef DASR_AUDIO_AUGMENT_H_
#define DASR_AUDIO_AUGMENT_H_

#include <cstdint>
#include <random>
#include <string>

#include "dasr/audio/wav.h"

namespace dasr::audio {

enum class AugmentKind { kNoise, kTimeShift, kTimeStretch, kPitchShift };

std::string AugmentKindName(AugmentKind kind);
AugmentKind ParseAugmentKind(const std::string& name);

// Only the fields of `kind` are read.
struct AugmentSpec {
  AugmentKind kind = AugmentKind::kNoise;
  double snr_db = 20.0;
  double shift_ms = 0.0;
  double rate = 1.0;
  double semitones = 0.0;
  std::uint64_t seed = 0;
};

// Sampling ranges used when the training pipeline draws random augmentations.
struct AugmentRanges {
  double snr_db_min = 5.0, snr_db_max = 25.0;
  double shift_ms_min = -200.0, shift_ms_max = 200.0;
  double rate_min = 0.9, rate_max = 1.1;
  double semitones_min = -2.0, semitones_max = 2.0;
};

// White Gaussian noise whose gain is solved so that the realized SNR, measured
// after clipping to [-1, 1], matches `snr_db`. Deterministic in `seed`.
AudioBuffer AddNoise(const AudioBuffer& audio, double snr_db, std::uint64_t seed);

// Positive shifts delay the signal. The vacated region is zero-filled.
AudioBuffer TimeShift(const AudioBuffer& audio, double shift_ms);

// Phase-vocoder stretch; output length is round(len / rate).
AudioBuffer TimeStretch(const AudioBuffer& audio, double rate);

// Stretch by 2^(-s/12) then resample back to the input length.
AudioBuffer PitchShift(const AudioBuffer& audio, double semitones);

AudioBuffer ApplyAugment(const AudioBuffer& audio, const AugmentSpec& spec);

AugmentSpec SampleAugmentSpec(const AugmentRanges& ranges, std::mt19937_64& rng);

}  // namespace dasr::audio

#endif  // DASR_AUDIO_AUGMENT_H_
