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

#ifndef DASR_ASR_TOKENIZER_H_
#define DASR_ASR_TOKENIZER_H_

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dasr::asr {

// Splits UTF-8 into code points. Invalid bytes raise kFormat.
std::u32string DecodeUtf8(std::string_view text);
std::string EncodeUtf8(std::u32string_view text);

// Character vocabulary. Ids 0-3 are reserved; text characters start at 4 in
// code point order, so the table is a function of the character set alone.
class Tokenizer {
 public:
  static constexpr int kPad = 0;
  static constexpr int kSos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;
  static constexpr int kNumReserved = 4;

  Tokenizer() = default;
  explicit Tokenizer(std::u32string chars);
  static Tokenizer FromTranscripts(std::span<const std::string> transcripts);

  int vocab_size() const { return kNumReserved + static_cast<int>(chars_.size()); }
  const std::u32string& chars() const { return chars_; }

  int Id(char32_t c) const;
  // sos, characters..., eos. Unknown characters become unk.
  std::vector<int> EncodeWithMarkers(std::string_view text) const;
  // Drops reserved ids except unk, which renders as U+FFFD.
  std::string Decode(std::span<const int> ids) const;

  bool operator==(const Tokenizer& o) const { return chars_ == o.chars_; }

 private:
  std::u32string chars_;
  std::map<char32_t, int> ids_;
};

}  // namespace dasr::asr

#endif  // DASR_ASR_TOKENIZER_H_
