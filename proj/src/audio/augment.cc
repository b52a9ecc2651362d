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

#include "dasr/audio/augment.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "dasr/audio/fft.h"
#include "dasr/error.h"

namespace dasr::audio {
namespace {

constexpr int kVocoderFft = 1024;
constexpr int kVocoderHop = kVocoderFft / 4;

double MeanPower(const std::vector<float>& x) {
  double acc = 0.0;
  for (float v : x) acc += static_cast<double>(v) * v;
  return x.empty() ? 0.0 : acc / static_cast<double>(x.size());
}

float Clip(double v) { return static_cast<float>(std::clamp(v, -1.0, 1.0)); }

double NoisePowerAtGain(const std::vector<float>& x, const std::vector<double>& noise, double gain) {
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = static_cast<double>(Clip(x[i] + gain * noise[i])) - x[i];
    acc += e * e;
  }
  return acc / static_cast<double>(x.size());
}

std::vector<double> PeriodicHann(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
  return w;
}

using Spectrogram = std::vector<std::vector<std::complex<double>>>;

// Centered STFT with zero padding of n_fft/2 on both sides.
Spectrogram Stft(const std::vector<float>& x, const Fft& fft, const std::vector<double>& window) {
  const int n_fft = fft.size();
  const int pad = n_fft / 2;
  const int padded_len = static_cast<int>(x.size()) + 2 * pad;
  const int n_frames = 1 + (padded_len - n_fft) / kVocoderHop;
  Spectrogram out(n_frames, std::vector<std::complex<double>>(n_fft / 2 + 1));
  std::vector<std::complex<double>> buf(n_fft);
  for (int t = 0; t < n_frames; ++t) {
    for (int n = 0; n < n_fft; ++n) {
      const int src = t * kVocoderHop + n - pad;
      const double v = (src >= 0 && src < static_cast<int>(x.size())) ? x[src] : 0.0;
      buf[n] = v * window[n];
    }
    fft.Forward(buf);
    std::copy_n(buf.begin(), n_fft / 2 + 1, out[t].begin());
  }
  return out;
}

std::vector<float> Istft(const Spectrogram& spec, const Fft& fft, const std::vector<double>& window,
                         int length) {
  const int n_fft = fft.size();
  const int pad = n_fft / 2;
  const int total = static_cast<int>(spec.size() - 1) * kVocoderHop + n_fft;
  std::vector<double> acc(total, 0.0);
  std::vector<double> norm(total, 0.0);
  std::vector<std::complex<double>> buf(n_fft);
  for (std::size_t t = 0; t < spec.size(); ++t) {
    for (int k = 0; k <= n_fft / 2; ++k) buf[k] = spec[t][k];
    for (int k = 1; k < n_fft / 2; ++k) buf[n_fft - k] = std::conj(spec[t][k]);
    fft.Inverse(buf);
    const int offset = static_cast<int>(t) * kVocoderHop;
    for (int n = 0; n < n_fft; ++n) {
      acc[offset + n] += buf[n].real() * window[n];
      norm[offset + n] += window[n] * window[n];
    }
  }
  std::vector<float> out(length, 0.0f);
  for (int i = 0; i < length; ++i) {
    const int src = i + pad;
    if (src >= total) break;
    const double v = norm[src] > 1e-8 ? acc[src] / norm[src] : acc[src];
    out[i] = Clip(v);
  }
  return out;
}

double WrapPhase(double p) {
  return p - 2.0 * std::numbers::pi * std::round(p / (2.0 * std::numbers::pi));
}

}  // namespace

std::string AugmentKindName(AugmentKind kind) {
  switch (kind) {
    case AugmentKind::kNoise: return "noise";
    case AugmentKind::kTimeShift: return "time_shift";
    case AugmentKind::kTimeStretch: return "time_stretch";
    case AugmentKind::kPitchShift: return "pitch_shift";
  }
  return "noise";
}

AugmentKind ParseAugmentKind(const std::string& name) {
  if (name == "noise") return AugmentKind::kNoise;
  if (name == "time_shift") return AugmentKind::kTimeShift;
  if (name == "time_stretch") return AugmentKind::kTimeStretch;
  if (name == "pitch_shift") return AugmentKind::kPitchShift;
  throw Error(ErrorCode::kConfig, "unknown augmentation kind: " + name);
}

AudioBuffer AddNoise(const AudioBuffer& audio, double snr_db, std::uint64_t seed) {
  if (!std::isfinite(snr_db)) throw Error(ErrorCode::kInvalidParameter, "snr_db must be finite");
  const double signal_power = MeanPower(audio.samples);
  if (!(signal_power > 0.0)) throw Error(ErrorCode::kUndefinedSnr, "input has zero signal power");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> noise(audio.samples.size());
  for (double& n : noise) n = gauss(rng);

  const double target = signal_power / std::pow(10.0, snr_db / 10.0);
  double raw_power = 0.0;
  for (double n : noise) raw_power += n * n;
  raw_power /= static_cast<double>(noise.size());

  // Clipping can only remove noise energy, so the unclipped gain is a lower
  // bound and realized power is monotone in gain.
  double lo = std::sqrt(target / raw_power);
  double gain = lo;
  if (NoisePowerAtGain(audio.samples, noise, lo) < target * (1.0 - 1e-9)) {
    double hi = lo;
    for (int i = 0; i < 64 && NoisePowerAtGain(audio.samples, noise, hi) < target; ++i) hi *= 2.0;
    for (int i = 0; i < 100; ++i) {
      const double mid = 0.5 * (lo + hi);
      if (NoisePowerAtGain(audio.samples, noise, mid) < target) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    gain = 0.5 * (lo + hi);
  }

  AudioBuffer out;
  out.sample_rate_hz = audio.sample_rate_hz;
  out.samples.resize(audio.samples.size());
  for (std::size_t i = 0; i < noise.size(); ++i) out.samples[i] = Clip(audio.samples[i] + gain * noise[i]);
  return out;
}

AudioBuffer TimeShift(const AudioBuffer& audio, double shift_ms) {
  const auto len = static_cast<long>(audio.samples.size());
  const long shift = std::lround(shift_ms * audio.sample_rate_hz / 1000.0);
  if (std::labs(shift) >= len && !(shift == 0 && len == 0)) {
    throw Error(ErrorCode::kInvalidShift, "shift must be shorter than the signal");
  }
  AudioBuffer out;
  out.sample_rate_hz = audio.sample_rate_hz;
  out.samples.assign(audio.samples.size(), 0.0f);
  for (long i = 0; i < len; ++i) {
    const long src = i - shift;
    if (src >= 0 && src < len) out.samples[i] = audio.samples[src];
  }
  return out;
}

AudioBuffer TimeStretch(const AudioBuffer& audio, double rate) {
  if (!(rate >= 0.5 && rate <= 2.0)) throw Error(ErrorCode::kInvalidRate, "rate must be in [0.5, 2]");
  const int out_len = static_cast<int>(std::lround(static_cast<double>(audio.samples.size()) / rate));
  AudioBuffer out;
  out.sample_rate_hz = audio.sample_rate_hz;
  if (audio.samples.empty()) return out;

  const Fft fft(kVocoderFft);
  const auto window = PeriodicHann(kVocoderFft);
  const Spectrogram spec = Stft(audio.samples, fft, window);
  const int n_frames = static_cast<int>(spec.size());
  const int n_bins = kVocoderFft / 2 + 1;

  std::vector<double> phase_advance(n_bins);
  for (int k = 0; k < n_bins; ++k) {
    phase_advance[k] = 2.0 * std::numbers::pi * k * kVocoderHop / kVocoderFft;
  }
  std::vector<double> phase(n_bins);
  for (int k = 0; k < n_bins; ++k) phase[k] = std::arg(spec[0][k]);

  Spectrogram stretched;
  const std::vector<std::complex<double>> silence(n_bins);
  for (double step = 0.0; step < n_frames; step += rate) {
    const int t = static_cast<int>(step);
    const double frac = step - t;
    const auto& c0 = spec[t];
    const auto& c1 = t + 1 < n_frames ? spec[t + 1] : silence;
    std::vector<std::complex<double>> column(n_bins);
    for (int k = 0; k < n_bins; ++k) {
      const double mag = (1.0 - frac) * std::abs(c0[k]) + frac * std::abs(c1[k]);
      column[k] = std::polar(mag, phase[k]);
      const double dphase = WrapPhase(std::arg(c1[k]) - std::arg(c0[k]) - phase_advance[k]);
      phase[k] += phase_advance[k] + dphase;
    }
    stretched.push_back(std::move(column));
  }
  out.samples = Istft(stretched, fft, window, out_len);
  return out;
}

AudioBuffer PitchShift(const AudioBuffer& audio, double semitones) {
  if (!(std::abs(semitones) <= 12.0)) {
    throw Error(ErrorCode::kInvalidParameter, "semitones must be within [-12, 12]");
  }
  if (semitones == 0.0 || audio.samples.empty()) return audio;
  const double rate = std::pow(2.0, -semitones / 12.0);
  const AudioBuffer stretched = TimeStretch(audio, rate);
  const std::size_t len = audio.samples.size();
  const std::size_t src_len = stretched.samples.size();
  const double step = static_cast<double>(src_len) / static_cast<double>(len);
  AudioBuffer out;
  out.sample_rate_hz = audio.sample_rate_hz;
  out.samples.resize(len);
  for (std::size_t i = 0; i < len; ++i) {
    const double pos = i * step;
    const auto j = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(j);
    const double a = j < src_len ? stretched.samples[j] : 0.0;
    const double b = j + 1 < src_len ? stretched.samples[j + 1] : 0.0;
    out.samples[i] = Clip((1.0 - frac) * a + frac * b);
  }
  return out;
}

AudioBuffer ApplyAugment(const AudioBuffer& audio, const AugmentSpec& spec) {
  switch (spec.kind) {
    case AugmentKind::kNoise: return AddNoise(audio, spec.snr_db, spec.seed);
    case AugmentKind::kTimeShift: return TimeShift(audio, spec.shift_ms);
    case AugmentKind::kTimeStretch: return TimeStretch(audio, spec.rate);
    case AugmentKind::kPitchShift: return PitchShift(audio, spec.semitones);
  }
  return audio;
}

AugmentSpec SampleAugmentSpec(const AugmentRanges& ranges, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto draw = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  AugmentSpec spec;
  spec.kind = static_cast<AugmentKind>(rng() % 4);
  spec.seed = rng();
  spec.snr_db = draw(ranges.snr_db_min, ranges.snr_db_max);
  spec.shift_ms = draw(ranges.shift_ms_min, ranges.shift_ms_max);
  spec.rate = draw(ranges.rate_min, ranges.rate_max);
  spec.semitones = draw(ranges.semitones_min, ranges.semitones_max);
  return spec;
}

}  // namespace dasr::audio
