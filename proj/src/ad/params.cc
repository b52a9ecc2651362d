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

#include "dasr/ad/params.h"

#include <algorithm>
#include <set>

#include "dasr/error.h"

namespace dasr::ad {

Parameter& ParamGroup::tensor(const std::string& tensor_name) {
  for (auto& t : tensors) {
    if (t.name == tensor_name) return t;
  }
  throw Error(ErrorCode::kConfig, "no tensor " + tensor_name + " in group " + name);
}

const Parameter& ParamGroup::tensor(const std::string& tensor_name) const {
  return const_cast<ParamGroup*>(this)->tensor(tensor_name);
}

ParamGroup& ParamStore::AddGroup(const std::string& name) {
  if (HasGroup(name)) throw Error(ErrorCode::kConfig, "duplicate parameter group " + name);
  ParamGroup& g = groups_.emplace_back();
  g.name = name;
  return g;
}

Parameter& ParamStore::AddUniform(const std::string& group_name, const std::string& name, Shape shape,
                                  float scale, std::mt19937_64& rng) {
  std::uniform_real_distribution<float> dist(-scale, scale);
  Parameter& p = AddZeros(group_name, name, std::move(shape));
  for (float& v : p.value) v = dist(rng);
  return p;
}

Parameter& ParamStore::AddZeros(const std::string& group_name, const std::string& name, Shape shape) {
  ParamGroup& g = HasGroup(group_name) ? group(group_name) : AddGroup(group_name);
  Parameter& p = g.tensors.emplace_back();
  p.name = name;
  p.value.assign(NumElements(shape), 0.0f);
  p.grad.assign(p.value.size(), 0.0f);
  p.shape = std::move(shape);
  return p;
}

bool ParamStore::HasGroup(const std::string& name) const {
  return std::any_of(groups_.begin(), groups_.end(), [&](const ParamGroup& g) { return g.name == name; });
}

ParamGroup& ParamStore::group(const std::string& name) {
  for (auto& g : groups_) {
    if (g.name == name) return g;
  }
  throw Error(ErrorCode::kConfig, "unknown parameter group " + name);
}

const ParamGroup& ParamStore::group(const std::string& name) const {
  return const_cast<ParamStore*>(this)->group(name);
}

std::vector<std::string> ParamStore::GroupNames() const {
  std::vector<std::string> names;
  for (const auto& g : groups_) names.push_back(g.name);
  return names;
}

void ParamStore::SetTrainable(std::span<const std::string> names) {
  std::set<std::string> wanted(names.begin(), names.end());
  for (const auto& n : wanted) {
    if (!HasGroup(n)) throw Error(ErrorCode::kConfig, "freeze spec names unknown group " + n);
  }
  for (auto& g : groups_) g.trainable = wanted.count(g.name) > 0;
}

void ParamStore::SetAllTrainable(bool trainable) {
  for (auto& g : groups_) g.trainable = trainable;
}

std::vector<std::string> ParamStore::TrainableGroups() const {
  std::vector<std::string> names;
  for (const auto& g : groups_) {
    if (g.trainable) names.push_back(g.name);
  }
  return names;
}

void ParamStore::ZeroGrad() {
  for (auto& g : groups_) {
    for (auto& t : g.tensors) std::fill(t.grad.begin(), t.grad.end(), 0.0f);
  }
}

void ParamStore::MaskFrozenGrads() {
  for (auto& g : groups_) {
    if (g.trainable) continue;
    for (auto& t : g.tensors) std::fill(t.grad.begin(), t.grad.end(), 0.0f);
  }
}

std::size_t ParamStore::NumParameters() const {
  std::size_t n = 0;
  for (const auto& g : groups_) {
    for (const auto& t : g.tensors) n += t.value.size();
  }
  return n;
}

bool ParamStore::operator==(const ParamStore& other) const {
  if (groups_.size() != other.groups_.size()) return false;
  for (std::size_t i = 0; i < groups_.size(); ++i) {
    const auto& a = groups_[i];
    const auto& b = other.groups_[i];
    if (a.name != b.name || a.tensors.size() != b.tensors.size()) return false;
    for (std::size_t j = 0; j < a.tensors.size(); ++j) {
      if (a.tensors[j].name != b.tensors[j].name || a.tensors[j].shape != b.tensors[j].shape ||
          a.tensors[j].value != b.tensors[j].value) {
        return false;
      }
    }
  }
  return true;
}

BoundParams::BoundParams(Tape<float>& tape, ParamStore& store) {
  for (auto& g : store.groups()) {
    for (auto& t : g.tensors) {
      vars_[g.name + "/" + t.name] = tape.Leaf(t.shape, t.value, t.grad, g.trainable);
    }
  }
}

BoundParams::BoundParams(Tape<float>& tape, const ParamStore& store) {
  for (const auto& g : store.groups()) {
    for (const auto& t : g.tensors) vars_[g.name + "/" + t.name] = tape.Constant(t.shape, t.value);
  }
}

Var<float> BoundParams::operator()(const std::string& group, const std::string& tensor) const {
  auto it = vars_.find(group + "/" + tensor);
  if (it == vars_.end()) throw Error(ErrorCode::kConfig, "parameter " + group + "/" + tensor + " not bound");
  return it->second;
}

}  // namespace dasr::ad
