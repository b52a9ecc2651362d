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

#include "dasr/asr/cer.h"

#include <algorithm>
#include <numeric>
#include <vector>

#include "dasr/asr/tokenizer.h"
#include "dasr/error.h"

namespace dasr::asr {

std::size_t EditDistance(std::u32string_view a, std::u32string_view b) {
  // Single rolling row over b.
  std::vector<std::size_t> row(b.size() + 1);
  std::iota(row.begin(), row.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({up + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

double Cer(std::string_view reference, std::string_view hypothesis) {
  const std::u32string ref = DecodeUtf8(reference);
  if (ref.empty()) throw Error(ErrorCode::kUndefinedCer, "empty reference transcript");
  return static_cast<double>(EditDistance(ref, DecodeUtf8(hypothesis))) / static_cast<double>(ref.size());
}

void CerAccumulator::Add(std::string_view reference, std::string_view hypothesis) {
  const std::u32string ref = DecodeUtf8(reference);
  edits += EditDistance(ref, DecodeUtf8(hypothesis));
  reference_chars += ref.size();
}

double CerAccumulator::Value() const {
  if (reference_chars == 0) throw Error(ErrorCode::kUndefinedCer, "no reference characters");
  return static_cast<double>(edits) / static_cast<double>(reference_chars);
}

}  // namespace dasr::asr
