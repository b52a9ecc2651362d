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

#ifndef DASR_AUDIO_FEATURES_H_
#define DASR_AUDIO_FEATURES_H_

#include <filesystem>
#include <vector>

#include "dasr/audio/wav.h"
#include "dasr/matrix.h"

namespace dasr::audio {

struct DspConfig {
  double frame_length_ms = 25.0;
  double frame_hop_ms = 10.0;
  int n_mels = 80;
  int fft_size = 512;
  double mel_low_hz = 20.0;
  double mel_high_hz = 7600.0;
  double log_floor = 1e-10;
  int delta_window = 2;
  double preemphasis = 0.97;
  // Per-utterance mean/variance normalization of the final feature columns.
  bool normalize = false;

  int frame_length_samples(int sample_rate_hz) const;
  int frame_hop_samples(int sample_rate_hz) const;
  // Throws kConfig when an invariant is violated for this sample rate.
  void Validate(int sample_rate_hz) const;
  bool operator==(const DspConfig&) const = default;
};

// Frames x (fbank | delta | delta-delta), time-major.
struct FeatureMatrix {
  Matrix frames;
  double frame_hop_ms = 10.0;
  double frame_length_ms = 25.0;

  int num_frames() const { return frames.rows; }
  int dim() const { return frames.cols; }
};

// floor((num_samples - frame_len) / hop) + 1, or 0 when the signal is shorter
// than one frame.
int NumFrames(int num_samples, int frame_len, int hop);

double HzToMel(double hz);
double MelToHz(double mel);

// Triangular filters on the one-sided spectrum of an fft_size DFT. Filter m
// rises from center[m-1] to center[m] and falls to center[m+1], with peak 1.
class MelFilterBank {
 public:
  MelFilterBank(int n_mels, int fft_size, int sample_rate_hz, double low_hz, double high_hz);

  int n_mels() const { return static_cast<int>(weights_.size()); }
  double center_hz(int m) const { return centers_hz_[m + 1]; }
  // Applies filter m to a magnitude spectrum of fft_size/2 + 1 bins.
  float Apply(int m, const float* spectrum) const;
  const std::vector<float>& weights(int m) const { return weights_[m]; }
  int first_bin(int m) const { return first_bin_[m]; }

 private:
  std::vector<double> centers_hz_;
  std::vector<std::vector<float>> weights_;
  std::vector<int> first_bin_;
};

// Pre-emphasis, Hamming window, DFT magnitude, mel filtering and natural log of
// max(energy, log_floor). Returns T x n_mels.
Matrix LogMelFbank(const AudioBuffer& audio, const DspConfig& cfg);

// Appends regression deltas and delta-deltas with replicated edges.
FeatureMatrix AppendDeltas(const Matrix& fbank, const DspConfig& cfg);

// LogMelFbank + AppendDeltas (+ optional normalization).
FeatureMatrix ComputeFeatures(const AudioBuffer& audio, const DspConfig& cfg);

// Binary container: "DASRFEAT" magic, u32 T, u32 D, then T*D little-endian
// f32 values in row-major order.
void WriteFeatureFile(const std::filesystem::path& path, const FeatureMatrix& features);
FeatureMatrix ReadFeatureFile(const std::filesystem::path& path);

}  // namespace dasr::audio

#endif  // DASR_AUDIO_FEATURES_H_
