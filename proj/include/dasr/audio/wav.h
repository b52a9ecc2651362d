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

#ifndef DASR_AUDIO_WAV_H_
#define DASR_AUDIO_WAV_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace dasr::audio {

inline constexpr int kCanonicalSampleRate = 16000;

// Mono PCM samples normalized to [-1, 1].
struct AudioBuffer {
  std::vector<float> samples;
  int sample_rate_hz = kCanonicalSampleRate;

  double duration_seconds() const {
    return static_cast<double>(samples.size()) / sample_rate_hz;
  }
};

// Parses a RIFF/WAVE container holding 16-bit mono PCM. Samples are scaled by
// 1/32768. Any other channel count or bit depth is rejected rather than
// converted.
AudioBuffer DecodeWav(std::span<const std::uint8_t> bytes);

// Writes 16-bit mono PCM. Samples are clipped to the int16 range.
std::vector<std::uint8_t> EncodeWav(const AudioBuffer& audio);

AudioBuffer ReadWavFile(const std::filesystem::path& path);
void WriteWavFile(const std::filesystem::path& path, const AudioBuffer& audio);

}  // namespace dasr::audio

#endif  // DASR_AUDIO_WAV_H_
