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

#ifndef DASR_MATRIX_H_
#define DASR_MATRIX_H_

#include <cstddef>
#include <span>
#include <vector>

namespace dasr {

// Dense row-major float matrix. Used for feature frames and other plain data
// that does not take part in differentiation.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<float> data;

  Matrix() = default;
  Matrix(int r, int c, float fill = 0.0f)
      : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {}

  float& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  float operator()(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }

  std::span<float> row(int r) {
    return {data.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)};
  }
  std::span<const float> row(int r) const {
    return {data.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)};
  }

  bool empty() const { return rows == 0 || cols == 0; }
  bool operator==(const Matrix&) const = default;
};

}  // namespace dasr

#endif  // DASR_MATRIX_H_
