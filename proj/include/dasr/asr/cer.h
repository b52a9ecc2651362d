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

#ifndef DASR_ASR_CER_H_
#define DASR_ASR_CER_H_

#include <cstddef>
#include <string>
#include <string_view>

namespace dasr::asr {

// Levenshtein distance with unit substitution, insertion and deletion costs.
std::size_t EditDistance(std::u32string_view a, std::u32string_view b);

// Edit distance over code points divided by the reference length. Can exceed
// 1 when the hypothesis has many insertions. Empty reference: kUndefinedCer.
double Cer(std::string_view reference, std::string_view hypothesis);

// Accumulates edits and reference lengths over a corpus.
struct CerAccumulator {
  std::size_t edits = 0;
  std::size_t reference_chars = 0;

  void Add(std::string_view reference, std::string_view hypothesis);
  // Throws kUndefinedCer when nothing was added.
  double Value() const;
};

}  // namespace dasr::asr

#endif  // DASR_ASR_CER_H_
