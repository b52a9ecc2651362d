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

#include "dasr/audio/wav.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "dasr/error.h"

namespace dasr::audio {
namespace {

std::uint32_t ReadU32(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) |
         (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

std::uint16_t ReadU16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

bool TagIs(std::span<const std::uint8_t> b, std::size_t at, const char* tag) {
  return std::memcmp(b.data() + at, tag, 4) == 0;
}

void PutU32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void PutU16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void PutTag(std::vector<std::uint8_t>& out, const char* tag) { out.insert(out.end(), tag, tag + 4); }

}  // namespace

AudioBuffer DecodeWav(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12 || !TagIs(bytes, 0, "RIFF") || !TagIs(bytes, 8, "WAVE")) {
    throw Error(ErrorCode::kFormat, "missing RIFF/WAVE header");
  }
  bool have_fmt = false;
  std::uint16_t channels = 0;
  std::uint16_t bits = 0;
  std::uint32_t sample_rate = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t size = ReadU32(bytes, pos + 4);
    const std::size_t body = pos + 8;
    if (size > bytes.size() - body) throw Error(ErrorCode::kFormat, "chunk overruns file");
    if (TagIs(bytes, pos, "fmt ")) {
      if (size < 16) throw Error(ErrorCode::kFormat, "fmt chunk too small");
      const std::uint16_t format = ReadU16(bytes, body);
      channels = ReadU16(bytes, body + 2);
      sample_rate = ReadU32(bytes, body + 4);
      bits = ReadU16(bytes, body + 14);
      if (format != 1) throw Error(ErrorCode::kUnsupportedFormat, "only PCM WAV is supported");
      if (channels != 1) {
        throw Error(ErrorCode::kUnsupportedFormat,
                    "expected mono, got " + std::to_string(channels) + " channels");
      }
      if (bits != 16) {
        throw Error(ErrorCode::kUnsupportedFormat,
                    "expected 16-bit samples, got " + std::to_string(bits));
      }
      if (sample_rate == 0) throw Error(ErrorCode::kFormat, "zero sample rate");
      have_fmt = true;
    } else if (TagIs(bytes, pos, "data")) {
      if (!have_fmt) throw Error(ErrorCode::kFormat, "data chunk before fmt chunk");
      if (size % 2 != 0) throw Error(ErrorCode::kFormat, "odd data chunk size");
      AudioBuffer audio;
      audio.sample_rate_hz = static_cast<int>(sample_rate);
      audio.samples.resize(size / 2);
      for (std::size_t i = 0; i < audio.samples.size(); ++i) {
        const auto v = static_cast<std::int16_t>(ReadU16(bytes, body + 2 * i));
        audio.samples[i] = static_cast<float>(v) / 32768.0f;
      }
      return audio;
    }
    pos = body + size + (size & 1u);
  }
  throw Error(ErrorCode::kFormat, have_fmt ? "missing data chunk" : "missing fmt chunk");
}

std::vector<std::uint8_t> EncodeWav(const AudioBuffer& audio) {
  const auto data_bytes = static_cast<std::uint32_t>(audio.samples.size() * 2);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  PutTag(out, "RIFF");
  PutU32(out, 36 + data_bytes);
  PutTag(out, "WAVE");
  PutTag(out, "fmt ");
  PutU32(out, 16);
  PutU16(out, 1);
  PutU16(out, 1);
  PutU32(out, static_cast<std::uint32_t>(audio.sample_rate_hz));
  PutU32(out, static_cast<std::uint32_t>(audio.sample_rate_hz) * 2);
  PutU16(out, 2);
  PutU16(out, 16);
  PutTag(out, "data");
  PutU32(out, data_bytes);
  for (float s : audio.samples) {
    const float scaled = std::round(s * 32768.0f);
    const auto v = static_cast<std::int16_t>(std::clamp(scaled, -32768.0f, 32767.0f));
    PutU16(out, static_cast<std::uint16_t>(v));
  }
  return out;
}

AudioBuffer ReadWavFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return DecodeWav(bytes);
}

void WriteWavFile(const std::filesystem::path& path, const AudioBuffer& audio) {
  const auto bytes = EncodeWav(audio);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "short write to " + path.string());
}

}  // namespace dasr::audio
