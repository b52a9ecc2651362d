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

#include "dasr/ad/adadelta.h"

#include <cmath>

#include "dasr/error.h"
#include "dasr/simd/kernels.h"

namespace dasr::ad {

AdaDeltaState MakeAdaDeltaState(const ParamStore& store, AdaDeltaConfig config) {
  if (!(config.rho > 0.0f && config.rho < 1.0f) || !(config.eps > 0.0f)) {
    throw Error(ErrorCode::kConfig, "AdaDelta needs rho in (0, 1) and eps > 0");
  }
  AdaDeltaState state;
  state.config = config;
  for (const auto& g : store.groups()) {
    for (const auto& t : g.tensors) {
      state.accum_grad_sq.emplace_back(t.value.size(), 0.0f);
      state.accum_update_sq.emplace_back(t.value.size(), 0.0f);
    }
  }
  return state;
}

void AdaDeltaStep(ParamStore& store, AdaDeltaState& state) {
  store.MaskFrozenGrads();
  std::size_t slot = 0;
  for (const auto& g : store.groups()) {
    for (const auto& t : g.tensors) {
      if (slot >= state.accum_grad_sq.size() || state.accum_grad_sq[slot].size() != t.value.size()) {
        throw Error(ErrorCode::kShape, "optimizer state does not match parameter " + g.name + "/" + t.name);
      }
      if (g.trainable) {
        for (float v : t.grad) {
          if (!std::isfinite(v)) {
            throw Error(ErrorCode::kNumeric, "non-finite gradient in " + g.name + "/" + t.name);
          }
        }
      }
      ++slot;
    }
  }
  const float rho = state.config.rho;
  const float eps = state.config.eps;
  const float lr = state.config.lr;
  slot = 0;
  for (auto& g : store.groups()) {
    for (auto& t : g.tensors) {
      auto& eg = state.accum_grad_sq[slot];
      auto& ex = state.accum_update_sq[slot];
      ++slot;
      if (!g.trainable) continue;
      for (std::size_t i = 0; i < t.value.size(); ++i) {
        const float grad = t.grad[i];
        eg[i] = rho * eg[i] + (1.0f - rho) * grad * grad;
        const float delta = -std::sqrt(ex[i] + eps) / std::sqrt(eg[i] + eps) * grad;
        ex[i] = rho * ex[i] + (1.0f - rho) * delta * delta;
        t.value[i] += lr * delta;
      }
    }
  }
  ++state.steps;
}

double ClipGradNorm(ParamStore& store, double max_norm) {
  double total = 0.0;
  for (const auto& g : store.groups()) {
    if (!g.trainable) continue;
    for (const auto& t : g.tensors) total += simd::SumSquares(t.grad.data(), t.grad.size());
  }
  const double norm = std::sqrt(total);
  if (norm > max_norm && norm > 0.0) {
    const auto scale = static_cast<float>(max_norm / norm);
    for (auto& g : store.groups()) {
      if (!g.trainable) continue;
      for (auto& t : g.tensors) {
        for (float& v : t.grad) v *= scale;
      }
    }
  }
  return norm;
}

}  // namespace dasr::ad
