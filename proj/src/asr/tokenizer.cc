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

#include "dasr/asr/tokenizer.h"

#include <algorithm>
#include <set>

#include "dasr/error.h"

namespace dasr::asr {

std::u32string DecodeUtf8(std::string_view text) {
  std::u32string out;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto b0 = static_cast<unsigned char>(text[i]);
    int extra = 0;
    char32_t cp = 0;
    if (b0 < 0x80) {
      cp = b0;
    } else if ((b0 & 0xE0) == 0xC0) {
      cp = b0 & 0x1F;
      extra = 1;
    } else if ((b0 & 0xF0) == 0xE0) {
      cp = b0 & 0x0F;
      extra = 2;
    } else if ((b0 & 0xF8) == 0xF0) {
      cp = b0 & 0x07;
      extra = 3;
    } else {
      throw Error(ErrorCode::kFormat, "invalid UTF-8 lead byte");
    }
    if (i + static_cast<std::size_t>(extra) >= text.size() && extra > 0) {
      throw Error(ErrorCode::kFormat, "truncated UTF-8 sequence");
    }
    for (int k = 1; k <= extra; ++k) {
      const auto b = static_cast<unsigned char>(text[i + k]);
      if ((b & 0xC0) != 0x80) throw Error(ErrorCode::kFormat, "invalid UTF-8 continuation byte");
      cp = (cp << 6) | (b & 0x3F);
    }
    out.push_back(cp);
    i += static_cast<std::size_t>(extra) + 1;
  }
  return out;
}

std::string EncodeUtf8(std::u32string_view text) {
  std::string out;
  for (char32_t c : text) {
    if (c < 0x80) {
      out.push_back(static_cast<char>(c));
    } else if (c < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (c >> 6)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    } else if (c < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (c >> 12)));
      out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (c >> 18)));
      out.push_back(static_cast<char>(0x80 | ((c >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    }
  }
  return out;
}

Tokenizer::Tokenizer(std::u32string chars) : chars_(std::move(chars)) {
  std::sort(chars_.begin(), chars_.end());
  chars_.erase(std::unique(chars_.begin(), chars_.end()), chars_.end());
  for (std::size_t i = 0; i < chars_.size(); ++i) ids_[chars_[i]] = kNumReserved + static_cast<int>(i);
}

Tokenizer Tokenizer::FromTranscripts(std::span<const std::string> transcripts) {
  std::set<char32_t> seen;
  for (const auto& t : transcripts) {
    for (char32_t c : DecodeUtf8(t)) seen.insert(c);
  }
  return Tokenizer(std::u32string(seen.begin(), seen.end()));
}

int Tokenizer::Id(char32_t c) const {
  auto it = ids_.find(c);
  return it == ids_.end() ? kUnk : it->second;
}

std::vector<int> Tokenizer::EncodeWithMarkers(std::string_view text) const {
  std::vector<int> ids = {kSos};
  for (char32_t c : DecodeUtf8(text)) ids.push_back(Id(c));
  ids.push_back(kEos);
  return ids;
}

std::string Tokenizer::Decode(std::span<const int> ids) const {
  std::u32string out;
  for (int id : ids) {
    if (id == kUnk) {
      out.push_back(U'�');
    } else if (id >= kNumReserved && id < vocab_size()) {
      out.push_back(chars_[static_cast<std::size_t>(id - kNumReserved)]);
    }
  }
  return EncodeUtf8(out);
}

}  // namespace dasr::asr
