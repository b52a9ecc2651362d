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

#include <cmath>
#include <complex>
#include <filesystem>
#include <numbers>
#include <random>

#include "dasr/error.h"
#include "gtest/gtest.h"

namespace dasr::audio {
namespace {

AudioBuffer Sine(double hz, double seconds, double amplitude = 0.5, int rate = 16000) {
  AudioBuffer a;
  a.sample_rate_hz = rate;
  const int n = static_cast<int>(seconds * rate);
  for (int i = 0; i < n; ++i) {
    a.samples.push_back(static_cast<float>(amplitude * std::sin(2.0 * std::numbers::pi * hz * i / rate)));
  }
  return a;
}

// Independent frame counter: walks frame start positions one hop at a time.
int CountFramesByLoop(int len, int frame, int hop) {
  int count = 0;
  for (int start = 0; start + frame <= len; start += hop) ++count;
  return count;
}

TEST(FeaturesTest, FrameCountMatchesLoopOracle) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 2000; ++trial) {
    const int frame = 1 + static_cast<int>(rng() % 600);
    const int hop = 1 + static_cast<int>(rng() % frame);
    const int len = static_cast<int>(rng() % 20000);
    ASSERT_EQ(NumFrames(len, frame, hop), CountFramesByLoop(len, frame, hop))
        << len << " " << frame << " " << hop;
  }
}

TEST(FeaturesTest, OneSecondGives98Frames) {
  const DspConfig cfg;
  const Matrix fbank = LogMelFbank(Sine(440, 1.0), cfg);
  EXPECT_EQ(fbank.rows, 98);
  EXPECT_EQ(fbank.cols, 80);
}

TEST(FeaturesTest, SilenceHitsLogFloor) {
  DspConfig cfg;
  AudioBuffer zeros;
  zeros.samples.assign(4000, 0.0f);
  const Matrix fbank = LogMelFbank(zeros, cfg);
  for (float v : fbank.data) EXPECT_FLOAT_EQ(v, static_cast<float>(std::log(1e-10)));
}

TEST(FeaturesTest, ShortAudioIsEmptyFeatureError) {
  AudioBuffer tiny;
  tiny.samples.assign(399, 0.1f);
  try {
    LogMelFbank(tiny, DspConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyFeature);
  }
}

TEST(FeaturesTest, InvalidConfigIsRejected) {
  DspConfig cfg;
  cfg.mel_high_hz = 9000;  // above Nyquist for 16 kHz
  EXPECT_THROW(LogMelFbank(Sine(440, 0.5), cfg), Error);
  cfg = DspConfig{};
  cfg.fft_size = 256;  // shorter than a 400-sample frame
  EXPECT_THROW(LogMelFbank(Sine(440, 0.5), cfg), Error);
}

// Brute-force O(N^2) DFT of one pre-emphasized, windowed frame; returns the
// frequency (Hz) of the strongest bin.
double PeakFrequencyByDft(const AudioBuffer& audio, int frame_len, int n_fft) {
  std::vector<double> frame(n_fft, 0.0);
  for (int n = 0; n < frame_len; ++n) {
    const double prev = n > 0 ? audio.samples[n - 1] : audio.samples[0];
    const double w = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * n / (frame_len - 1));
    frame[n] = (audio.samples[n] - 0.97 * prev) * w;
  }
  int best = 0;
  double best_mag = -1.0;
  for (int k = 0; k <= n_fft / 2; ++k) {
    std::complex<double> acc;
    for (int n = 0; n < n_fft; ++n) acc += frame[n] * std::polar(1.0, -2.0 * std::numbers::pi * k * n / n_fft);
    if (std::abs(acc) > best_mag) {
      best_mag = std::abs(acc);
      best = k;
    }
  }
  return static_cast<double>(best) * audio.sample_rate_hz / n_fft;
}

TEST(FeaturesTest, SineLandsInNearestMelBin) {
  const DspConfig cfg;
  const AudioBuffer tone = Sine(1000.0, 0.5);
  const double peak_hz = PeakFrequencyByDft(tone, 400, cfg.fft_size);
  EXPECT_NEAR(peak_hz, 1000.0, 16.0);

  const MelFilterBank bank(cfg.n_mels, cfg.fft_size, 16000, cfg.mel_low_hz, cfg.mel_high_hz);
  int nearest = 0;
  for (int m = 1; m < cfg.n_mels; ++m) {
    if (std::abs(bank.center_hz(m) - 1000.0) < std::abs(bank.center_hz(nearest) - 1000.0)) nearest = m;
  }
  const Matrix fbank = LogMelFbank(tone, cfg);
  for (int t = 0; t < fbank.rows; ++t) {
    int argmax = 0;
    for (int m = 1; m < fbank.cols; ++m) {
      if (fbank(t, m) > fbank(t, argmax)) argmax = m;
    }
    EXPECT_EQ(argmax, nearest) << "frame " << t;
  }
}

TEST(FeaturesTest, PolarityFlipLeavesFbankUnchanged) {
  const DspConfig cfg;
  AudioBuffer a = Sine(300.0, 0.3);
  std::mt19937_64 rng(1);
  std::normal_distribution<float> noise(0.0f, 0.05f);
  for (float& s : a.samples) s += noise(rng);
  AudioBuffer flipped = a;
  for (float& s : flipped.samples) s = -s;
  EXPECT_EQ(LogMelFbank(a, cfg), LogMelFbank(flipped, cfg));
}

TEST(FeaturesTest, PositiveScalingKeepsArgmaxBin) {
  const DspConfig cfg;
  AudioBuffer a = Sine(700.0, 0.3, 0.3);
  AudioBuffer b = a;
  for (float& s : b.samples) s *= 2.5f;
  const Matrix fa = LogMelFbank(a, cfg);
  const Matrix fb = LogMelFbank(b, cfg);
  for (int t = 0; t < fa.rows; ++t) {
    int ia = 0, ib = 0;
    for (int m = 1; m < fa.cols; ++m) {
      if (fa(t, m) > fa(t, ia)) ia = m;
      if (fb(t, m) > fb(t, ib)) ib = m;
    }
    EXPECT_EQ(ia, ib);
  }
}

TEST(FeaturesTest, DeltasOfConstantAreZero) {
  Matrix fbank(10, 4, 3.25f);
  const FeatureMatrix f = AppendDeltas(fbank, DspConfig{});
  ASSERT_EQ(f.dim(), 12);
  for (int t = 0; t < 10; ++t) {
    for (int c = 4; c < 12; ++c) EXPECT_EQ(f.frames(t, c), 0.0f);
  }
}

TEST(FeaturesTest, DeltaOfLinearRampIsOneInInterior) {
  Matrix fbank(12, 2);
  for (int t = 0; t < 12; ++t) fbank(t, 0) = fbank(t, 1) = static_cast<float>(t);
  const FeatureMatrix f = AppendDeltas(fbank, DspConfig{});
  for (int t = 2; t < 10; ++t) EXPECT_EQ(f.frames(t, 2), 1.0f);
  // Replicated edges shrink the slope at the boundary.
  EXPECT_LT(f.frames(0, 2), 1.0f);
}

TEST(FeaturesTest, SingleFrameHasZeroDeltas) {
  Matrix fbank(1, 3);
  fbank(0, 0) = 1.0f;
  fbank(0, 1) = -2.0f;
  fbank(0, 2) = 7.0f;
  const FeatureMatrix f = AppendDeltas(fbank, DspConfig{});
  for (int c = 3; c < 9; ++c) EXPECT_EQ(f.frames(0, c), 0.0f);
}

TEST(FeaturesTest, QuadraticRampHasConstantDeltaDelta) {
  const int frames = 20;
  Matrix fbank(frames, 1);
  for (int t = 0; t < frames; ++t) fbank(t, 0) = static_cast<float>(t * t);
  const FeatureMatrix f = AppendDeltas(fbank, DspConfig{});
  // delta(t^2) = 2t and delta(2t) = 2 wherever both windows stay inside.
  for (int t = 4; t < frames - 4; ++t) {
    EXPECT_NEAR(f.frames(t, 1), 2.0 * t, 1e-9);
    EXPECT_NEAR(f.frames(t, 2), 2.0, 1e-9);
  }
}

TEST(FeaturesTest, FeatureFileRoundTrip) {
  const FeatureMatrix f = ComputeFeatures(Sine(500.0, 0.2), DspConfig{});
  const auto path = std::filesystem::temp_directory_path() / "dasr_features_test.feat";
  WriteFeatureFile(path, f);
  const FeatureMatrix g = ReadFeatureFile(path);
  EXPECT_EQ(g.frames, f.frames);
  std::filesystem::remove(path);
}

TEST(FeaturesTest, NormalizationGivesZeroMeanColumns) {
  DspConfig cfg;
  cfg.normalize = true;
  const FeatureMatrix f = ComputeFeatures(Sine(500.0, 0.5), cfg);
  for (int c = 0; c < f.dim(); c += 17) {
    double mean = 0.0;
    for (int t = 0; t < f.num_frames(); ++t) mean += f.frames(t, c);
    EXPECT_NEAR(mean / f.num_frames(), 0.0, 1e-4);
  }
}

}  // namespace
}  // namespace dasr::audio
