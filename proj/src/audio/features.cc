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

#include "dasr/audio/features.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "dasr/audio/fft.h"
#include "dasr/binary_io.h"
#include "dasr/error.h"
#include "dasr/simd/kernels.h"

namespace dasr::audio {

namespace {
constexpr char kFeatureMagic[] = "DASRFEAT";
}  // namespace

int DspConfig::frame_length_samples(int sample_rate_hz) const {
  return static_cast<int>(std::lround(frame_length_ms * sample_rate_hz / 1000.0));
}

int DspConfig::frame_hop_samples(int sample_rate_hz) const {
  return static_cast<int>(std::lround(frame_hop_ms * sample_rate_hz / 1000.0));
}

void DspConfig::Validate(int sample_rate_hz) const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::kConfig, "DspConfig: " + what); };
  if (sample_rate_hz <= 0) fail("sample rate must be positive");
  if (frame_hop_ms <= 0 || frame_length_ms < frame_hop_ms) fail("need frame_length_ms >= frame_hop_ms > 0");
  if (frame_hop_samples(sample_rate_hz) < 1) fail("hop shorter than one sample");
  if (!IsPowerOfTwo(fft_size)) fail("fft_size must be a power of two");
  if (fft_size < frame_length_samples(sample_rate_hz)) fail("fft_size shorter than frame");
  if (n_mels < 1) fail("n_mels must be >= 1");
  if (!(mel_low_hz >= 0 && mel_low_hz < mel_high_hz && mel_high_hz <= sample_rate_hz / 2.0)) {
    fail("need 0 <= mel_low_hz < mel_high_hz <= sample_rate/2");
  }
  if (!(log_floor > 0)) fail("log_floor must be positive");
  if (delta_window < 1) fail("delta_window must be >= 1");
}

int NumFrames(int num_samples, int frame_len, int hop) {
  if (num_samples < frame_len) return 0;
  return (num_samples - frame_len) / hop + 1;
}

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double MelToHz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterBank::MelFilterBank(int n_mels, int fft_size, int sample_rate_hz, double low_hz,
                             double high_hz) {
  const double mel_lo = HzToMel(low_hz);
  const double mel_hi = HzToMel(high_hz);
  centers_hz_.resize(n_mels + 2);
  for (int i = 0; i < n_mels + 2; ++i) {
    centers_hz_[i] = MelToHz(mel_lo + (mel_hi - mel_lo) * i / (n_mels + 1));
  }
  const int n_bins = fft_size / 2 + 1;
  const double bin_hz = static_cast<double>(sample_rate_hz) / fft_size;
  weights_.resize(n_mels);
  first_bin_.resize(n_mels);
  for (int m = 0; m < n_mels; ++m) {
    const double left = centers_hz_[m];
    const double center = centers_hz_[m + 1];
    const double right = centers_hz_[m + 2];
    int first = -1;
    std::vector<float> w;
    for (int k = 0; k < n_bins; ++k) {
      const double f = k * bin_hz;
      double v = 0.0;
      if (f > left && f <= center) {
        v = (f - left) / (center - left);
      } else if (f > center && f < right) {
        v = (right - f) / (right - center);
      }
      if (v > 0.0) {
        if (first < 0) first = k;
        w.resize(k - first + 1, 0.0f);
        w[k - first] = static_cast<float>(v);
      }
    }
    first_bin_[m] = std::max(first, 0);
    weights_[m] = std::move(w);
  }
}

float MelFilterBank::Apply(int m, const float* spectrum) const {
  const auto& w = weights_[m];
  return simd::Dot(w.data(), spectrum + first_bin_[m], w.size());
}

Matrix LogMelFbank(const AudioBuffer& audio, const DspConfig& cfg) {
  cfg.Validate(audio.sample_rate_hz);
  const int frame_len = cfg.frame_length_samples(audio.sample_rate_hz);
  const int hop = cfg.frame_hop_samples(audio.sample_rate_hz);
  const int n_frames = NumFrames(static_cast<int>(audio.samples.size()), frame_len, hop);
  if (n_frames == 0) {
    throw Error(ErrorCode::kEmptyFeature, "audio shorter than one frame (" +
                                              std::to_string(audio.samples.size()) + " < " +
                                              std::to_string(frame_len) + " samples)");
  }
  const MelFilterBank bank(cfg.n_mels, cfg.fft_size, audio.sample_rate_hz, cfg.mel_low_hz,
                           cfg.mel_high_hz);
  const Fft fft(cfg.fft_size);
  std::vector<double> window(frame_len);
  for (int n = 0; n < frame_len; ++n) {
    window[n] = frame_len > 1
                    ? 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * n / (frame_len - 1))
                    : 1.0;
  }
  const int n_bins = cfg.fft_size / 2 + 1;
  std::vector<std::complex<double>> buf(cfg.fft_size);
  std::vector<float> magnitude(n_bins);
  Matrix out(n_frames, cfg.n_mels);
  const float log_floor = static_cast<float>(cfg.log_floor);
  for (int t = 0; t < n_frames; ++t) {
    const float* x = audio.samples.data() + static_cast<std::size_t>(t) * hop;
    std::fill(buf.begin(), buf.end(), std::complex<double>());
    for (int n = 0; n < frame_len; ++n) {
      const double prev = n > 0 ? x[n - 1] : x[0];
      buf[n] = (x[n] - cfg.preemphasis * prev) * window[n];
    }
    fft.Forward(buf);
    for (int k = 0; k < n_bins; ++k) magnitude[k] = static_cast<float>(std::abs(buf[k]));
    for (int m = 0; m < cfg.n_mels; ++m) {
      out(t, m) = std::log(std::max(bank.Apply(m, magnitude.data()), log_floor));
    }
  }
  return out;
}

namespace {

// Regression deltas over time with replicated edge frames.
Matrix Deltas(const Matrix& x, int window) {
  Matrix out(x.rows, x.cols);
  double denom = 0.0;
  for (int n = 1; n <= window; ++n) denom += 2.0 * n * n;
  const int last = x.rows - 1;
  for (int t = 0; t < x.rows; ++t) {
    for (int c = 0; c < x.cols; ++c) {
      double acc = 0.0;
      for (int n = 1; n <= window; ++n) {
        const int ahead = std::min(t + n, last);
        const int behind = std::max(t - n, 0);
        acc += n * (static_cast<double>(x(ahead, c)) - x(behind, c));
      }
      out(t, c) = static_cast<float>(acc / denom);
    }
  }
  return out;
}

}  // namespace

FeatureMatrix AppendDeltas(const Matrix& fbank, const DspConfig& cfg) {
  if (fbank.rows < 1) throw Error(ErrorCode::kEmptyFeature, "need at least one frame");
  const Matrix d1 = Deltas(fbank, cfg.delta_window);
  const Matrix d2 = Deltas(d1, cfg.delta_window);
  const int n = fbank.cols;
  FeatureMatrix out;
  out.frame_hop_ms = cfg.frame_hop_ms;
  out.frame_length_ms = cfg.frame_length_ms;
  out.frames = Matrix(fbank.rows, 3 * n);
  for (int t = 0; t < fbank.rows; ++t) {
    auto row = out.frames.row(t);
    std::copy_n(fbank.row(t).begin(), n, row.begin());
    std::copy_n(d1.row(t).begin(), n, row.begin() + n);
    std::copy_n(d2.row(t).begin(), n, row.begin() + 2 * n);
  }
  return out;
}

FeatureMatrix ComputeFeatures(const AudioBuffer& audio, const DspConfig& cfg) {
  FeatureMatrix features = AppendDeltas(LogMelFbank(audio, cfg), cfg);
  if (cfg.normalize) {
    Matrix& f = features.frames;
    for (int c = 0; c < f.cols; ++c) {
      double mean = 0.0;
      for (int t = 0; t < f.rows; ++t) mean += f(t, c);
      mean /= f.rows;
      double var = 0.0;
      for (int t = 0; t < f.rows; ++t) var += (f(t, c) - mean) * (f(t, c) - mean);
      const double sd = std::sqrt(var / f.rows);
      const double inv = sd > 1e-8 ? 1.0 / sd : 1.0;
      for (int t = 0; t < f.rows; ++t) f(t, c) = static_cast<float>((f(t, c) - mean) * inv);
    }
  }
  return features;
}

void WriteFeatureFile(const std::filesystem::path& path, const FeatureMatrix& features) {
  ByteWriter w;
  w.Raw(std::string_view(kFeatureMagic, 8));
  w.U32(static_cast<std::uint32_t>(features.frames.rows));
  w.U32(static_cast<std::uint32_t>(features.frames.cols));
  w.F32s(features.frames.data);
  WriteFileBytes(path, w.bytes());
}

FeatureMatrix ReadFeatureFile(const std::filesystem::path& path) {
  const auto bytes = ReadFileBytes(path);
  ByteReader r(bytes, ErrorCode::kFormat);
  if (r.Raw(8) != std::string_view(kFeatureMagic, 8)) {
    throw Error(ErrorCode::kFormat, "bad feature file magic in " + path.string());
  }
  FeatureMatrix out;
  const int rows = static_cast<int>(r.U32());
  const int cols = static_cast<int>(r.U32());
  out.frames = Matrix(rows, cols);
  r.F32s(out.frames.data);
  if (!r.done()) throw Error(ErrorCode::kFormat, "trailing bytes in feature file");
  return out;
}

}  // namespace dasr::audio
