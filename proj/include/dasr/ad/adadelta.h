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

#ifndef DASR_AD_ADADELTA_H_
#define DASR_AD_ADADELTA_H_

#include <cstdint>
#include <vector>

#include "dasr/ad/params.h"

namespace dasr::ad {

struct AdaDeltaConfig {
  float rho = 0.95f;
  float eps = 1e-6f;
  // Multiplier on the update; 1.0 is the textbook method.
  float lr = 1.0f;
};

// Running averages E[g^2] and E[dx^2] for every tensor, in store order.
struct AdaDeltaState {
  AdaDeltaConfig config;
  std::vector<std::vector<float>> accum_grad_sq;
  std::vector<std::vector<float>> accum_update_sq;
  std::uint64_t steps = 0;
};

AdaDeltaState MakeAdaDeltaState(const ParamStore& store, AdaDeltaConfig config = {});

//   E[g^2]  <- rho E[g^2] + (1 - rho) g^2
//   dx       = -sqrt(E[dx^2] + eps) / sqrt(E[g^2] + eps) * g
//   E[dx^2] <- rho E[dx^2] + (1 - rho) dx^2
//   x       += lr * dx
// Frozen groups have their gradients zeroed and are skipped. A non-finite
// gradient in any trainable tensor raises kNumeric before anything changes.
void AdaDeltaStep(ParamStore& store, AdaDeltaState& state);

// Scales trainable gradients so their global L2 norm is at most max_norm.
// Returns the norm before scaling.
double ClipGradNorm(ParamStore& store, double max_norm);

}  // namespace dasr::ad

#endif  // DASR_AD_ADADELTA_H_
