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

#ifndef DASR_AUDIO_FFT_H_
#define DASR_AUDIO_FFT_H_

#include <complex>
#include <span>
#include <vector>

namespace dasr::audio {

// In-place iterative radix-2 FFT with precomputed twiddles. Size must be a
// power of two.
class Fft {
 public:
  explicit Fft(int size);

  int size() const { return size_; }

  // Forward transform: X_k = sum_n x_n exp(-2 pi i k n / N).
  void Forward(std::span<std::complex<double>> data) const;
  // Inverse transform including the 1/N factor.
  void Inverse(std::span<std::complex<double>> data) const;

 private:
  void Transform(std::span<std::complex<double>> data, bool inverse) const;

  int size_;
  std::vector<int> bit_reverse_;
  std::vector<std::complex<double>> twiddles_;
};

bool IsPowerOfTwo(int n);

}  // namespace dasr::audio

#endif  // DASR_AUDIO_FFT_H_
