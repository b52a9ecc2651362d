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

#include "dasr/audio/fft.h"

#include <cmath>
#include <numbers>
#include <utility>

#include "dasr/error.h"

namespace dasr::audio {

bool IsPowerOfTwo(int n) { return n > 0 && (n & (n - 1)) == 0; }

Fft::Fft(int size) : size_(size) {
  if (!IsPowerOfTwo(size)) {
    throw Error(ErrorCode::kInvalidParameter, "FFT size must be a power of two");
  }
  int bits = 0;
  while ((1 << bits) < size) ++bits;
  bit_reverse_.resize(size);
  for (int i = 0; i < size; ++i) {
    int r = 0;
    for (int b = 0; b < bits; ++b) r |= ((i >> b) & 1) << (bits - 1 - b);
    bit_reverse_[i] = r;
  }
  twiddles_.resize(size / 2);
  for (int k = 0; k < size / 2; ++k) {
    const double angle = -2.0 * std::numbers::pi * k / size;
    twiddles_[k] = {std::cos(angle), std::sin(angle)};
  }
}

void Fft::Forward(std::span<std::complex<double>> data) const { Transform(data, false); }

void Fft::Inverse(std::span<std::complex<double>> data) const {
  Transform(data, true);
  const double scale = 1.0 / size_;
  for (auto& v : data) v *= scale;
}

void Fft::Transform(std::span<std::complex<double>> data, bool inverse) const {
  if (static_cast<int>(data.size()) != size_) {
    throw Error(ErrorCode::kShape, "FFT input length does not match plan size");
  }
  for (int i = 0; i < size_; ++i) {
    if (i < bit_reverse_[i]) std::swap(data[i], data[bit_reverse_[i]]);
  }
  for (int len = 2; len <= size_; len <<= 1) {
    const int half = len / 2;
    const int stride = size_ / len;
    for (int start = 0; start < size_; start += len) {
      for (int j = 0; j < half; ++j) {
        std::complex<double> w = twiddles_[j * stride];
        if (inverse) w = std::conj(w);
        const std::complex<double> t = w * data[start + j + half];
        data[start + j + half] = data[start + j] - t;
        data[start + j] += t;
      }
    }
  }
}

}  // namespace dasr::audio
