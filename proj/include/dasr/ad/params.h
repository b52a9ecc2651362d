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

#ifndef DASR_AD_PARAMS_H_
#define DASR_AD_PARAMS_H_

#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dasr/ad/tape.h"

namespace dasr::ad {

struct Parameter {
  std::string name;
  Shape shape;
  std::vector<float> value;
  std::vector<float> grad;
};

// A named unit of freezing: e.g. "encoder.vgg.conv1" holds that layer's
// weight and bias. Frozen groups never receive optimizer updates.
struct ParamGroup {
  std::string name;
  std::vector<Parameter> tensors;
  bool trainable = true;

  Parameter& tensor(const std::string& tensor_name);
  const Parameter& tensor(const std::string& tensor_name) const;
};

class ParamStore {
 public:
  // Throws kConfig on duplicate names.
  ParamGroup& AddGroup(const std::string& name);
  // Adds a tensor initialized uniform(-scale, scale) from `rng`.
  Parameter& AddUniform(const std::string& group, const std::string& name, Shape shape, float scale,
                        std::mt19937_64& rng);
  Parameter& AddZeros(const std::string& group, const std::string& name, Shape shape);

  bool HasGroup(const std::string& name) const;
  ParamGroup& group(const std::string& name);
  const ParamGroup& group(const std::string& name) const;
  std::vector<ParamGroup>& groups() { return groups_; }
  const std::vector<ParamGroup>& groups() const { return groups_; }
  std::vector<std::string> GroupNames() const;

  // Exactly the named groups become trainable; unknown names raise kConfig
  // and leave the store untouched.
  void SetTrainable(std::span<const std::string> names);
  void SetAllTrainable(bool trainable);
  std::vector<std::string> TrainableGroups() const;

  void ZeroGrad();
  // Zeroes gradients of frozen groups.
  void MaskFrozenGrads();
  std::size_t NumParameters() const;

  // Removes every group for which keep(name) is false.
  template <typename Pred>
  void Filter(Pred keep) {
    std::vector<ParamGroup> kept;
    for (auto& g : groups_) {
      if (keep(g.name)) kept.push_back(std::move(g));
    }
    groups_ = std::move(kept);
  }

  bool operator==(const ParamStore& other) const;

 private:
  std::vector<ParamGroup> groups_;
};

// Tape leaves for every tensor in a store, keyed "group/tensor". Leaves of
// frozen groups do not require gradients, so backward skips their subgraphs.
class BoundParams {
 public:
  BoundParams(Tape<float>& tape, ParamStore& store);
  // Inference binding: every tensor becomes a constant.
  BoundParams(Tape<float>& tape, const ParamStore& store);
  Var<float> operator()(const std::string& group, const std::string& tensor) const;

 private:
  std::map<std::string, Var<float>> vars_;
};

}  // namespace dasr::ad

#endif  // DASR_AD_PARAMS_H_
