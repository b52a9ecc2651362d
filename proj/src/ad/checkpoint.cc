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

#include "dasr/ad/checkpoint.h"

#include "dasr/binary_io.h"
#include "dasr/error.h"

namespace dasr::ad {
namespace {
constexpr std::string_view kMagic = "DASRCKPT";
}  // namespace

std::vector<std::uint8_t> SerializeCheckpoint(const Checkpoint& ckpt) {
  ByteWriter w;
  w.Raw(kMagic);
  w.U32(kCheckpointVersion);
  w.U32(static_cast<std::uint32_t>(ckpt.metadata.size()));
  for (const auto& [k, v] : ckpt.metadata) {
    w.Str(k);
    w.Str(v);
  }
  const auto& groups = ckpt.params.groups();
  w.U32(static_cast<std::uint32_t>(groups.size()));
  for (const auto& g : groups) {
    w.Str(g.name);
    w.U8(g.trainable ? 1 : 0);
    w.U32(static_cast<std::uint32_t>(g.tensors.size()));
    for (const auto& t : g.tensors) {
      w.Str(t.name);
      w.U32(static_cast<std::uint32_t>(t.shape.size()));
      for (int d : t.shape) w.I32(d);
      w.F32s(t.value);
    }
  }
  w.U8(ckpt.optimizer ? 1 : 0);
  if (ckpt.optimizer) {
    const auto& s = *ckpt.optimizer;
    w.F32(s.config.rho);
    w.F32(s.config.eps);
    w.F32(s.config.lr);
    w.U64(s.steps);
    for (std::size_t i = 0; i < s.accum_grad_sq.size(); ++i) {
      w.F32s(s.accum_grad_sq[i]);
      w.F32s(s.accum_update_sq[i]);
    }
  }
  return w.bytes();
}

Checkpoint DeserializeCheckpoint(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, ErrorCode::kCheckpoint);
  if (r.Raw(kMagic.size()) != kMagic) throw Error(ErrorCode::kCheckpoint, "bad checkpoint magic");
  const std::uint32_t version = r.U32();
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::kCheckpoint, "unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  const std::uint32_t n_meta = r.U32();
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    std::string key = r.Str();
    ckpt.metadata[key] = r.Str();
  }
  const std::uint32_t n_groups = r.U32();
  for (std::uint32_t gi = 0; gi < n_groups; ++gi) {
    const std::string name = r.Str();
    ParamGroup& g = ckpt.params.AddGroup(name);
    g.trainable = r.U8() != 0;
    const std::uint32_t n_tensors = r.U32();
    for (std::uint32_t ti = 0; ti < n_tensors; ++ti) {
      Parameter& t = g.tensors.emplace_back();
      t.name = r.Str();
      const std::uint32_t ndim = r.U32();
      if (ndim > 8) throw Error(ErrorCode::kCheckpoint, "implausible tensor rank");
      for (std::uint32_t d = 0; d < ndim; ++d) {
        const int dim = r.I32();
        if (dim < 0) throw Error(ErrorCode::kCheckpoint, "negative dimension");
        t.shape.push_back(dim);
      }
      t.value.resize(NumElements(t.shape));
      r.F32s(t.value);
      t.grad.assign(t.value.size(), 0.0f);
    }
  }
  if (r.U8() != 0) {
    AdaDeltaState s;
    s.config.rho = r.F32();
    s.config.eps = r.F32();
    s.config.lr = r.F32();
    s.steps = r.U64();
    for (const auto& g : ckpt.params.groups()) {
      for (const auto& t : g.tensors) {
        s.accum_grad_sq.emplace_back(t.value.size());
        r.F32s(s.accum_grad_sq.back());
        s.accum_update_sq.emplace_back(t.value.size());
        r.F32s(s.accum_update_sq.back());
      }
    }
    ckpt.optimizer = std::move(s);
  }
  if (!r.done()) throw Error(ErrorCode::kCheckpoint, "trailing bytes in checkpoint");
  return ckpt;
}

void SaveCheckpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  WriteFileBytes(path, SerializeCheckpoint(ckpt));
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorCode::kDependency, "missing checkpoint file " + path.string());
  }
  return DeserializeCheckpoint(ReadFileBytes(path));
}

void CopyParams(const ParamStore& src, ParamStore& dst, bool require_all) {
  for (const auto& sg : src.groups()) {
    if (!dst.HasGroup(sg.name)) throw Error(ErrorCode::kCheckpoint, "unexpected group " + sg.name);
    const ParamGroup& dg = dst.group(sg.name);
    if (dg.tensors.size() != sg.tensors.size()) {
      throw Error(ErrorCode::kCheckpoint, "tensor count mismatch in group " + sg.name);
    }
    for (std::size_t i = 0; i < sg.tensors.size(); ++i) {
      if (dg.tensors[i].name != sg.tensors[i].name || dg.tensors[i].shape != sg.tensors[i].shape) {
        throw Error(ErrorCode::kCheckpoint, "tensor mismatch in group " + sg.name + ": " + sg.tensors[i].name +
                                                ShapeString(sg.tensors[i].shape) + " vs " + dg.tensors[i].name +
                                                ShapeString(dg.tensors[i].shape));
      }
    }
  }
  if (require_all) {
    for (const auto& dg : dst.groups()) {
      if (!src.HasGroup(dg.name)) throw Error(ErrorCode::kCheckpoint, "checkpoint lacks group " + dg.name);
    }
  }
  for (const auto& sg : src.groups()) {
    ParamGroup& dg = dst.group(sg.name);
    for (std::size_t i = 0; i < sg.tensors.size(); ++i) dg.tensors[i].value = sg.tensors[i].value;
  }
}

}  // namespace dasr::ad
