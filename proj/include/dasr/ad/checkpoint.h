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

#ifndef DASR_AD_CHECKPOINT_H_
#define DASR_AD_CHECKPOINT_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dasr/ad/adadelta.h"
#include "dasr/ad/params.h"

namespace dasr::ad {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Versioned container shared by ASR, head and baseline models.
//
// Layout (little-endian):
//   "DASRCKPT" u32 version
//   u32 n_meta   { str key, str value }*
//   u32 n_groups { str name, u8 trainable, u32 n_tensors
//                  { str name, u32 ndim, i32 dims[ndim], f32 values[] }* }*
//   u8 has_optimizer [f32 rho, f32 eps, f32 lr, u64 steps,
//                     per tensor: f32 E[g^2][], f32 E[dx^2][]]
// where str = u32 length + bytes.
struct Checkpoint {
  std::map<std::string, std::string> metadata;
  ParamStore params;
  std::optional<AdaDeltaState> optimizer;
};

std::vector<std::uint8_t> SerializeCheckpoint(const Checkpoint& ckpt);
Checkpoint DeserializeCheckpoint(std::span<const std::uint8_t> bytes);
void SaveCheckpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint LoadCheckpoint(const std::filesystem::path& path);

// Copies values of every group in `src` into the same-named group of `dst`.
// Tensor names and shapes must match exactly. With `require_all`, `dst` may
// not contain groups absent from `src`.
void CopyParams(const ParamStore& src, ParamStore& dst, bool require_all);

}  // namespace dasr::ad

#endif  // DASR_AD_CHECKPOINT_H_
