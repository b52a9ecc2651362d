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

#ifndef DASR_AD_TAPE_H_
#define DASR_AD_TAPE_H_

#include <algorithm>
#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dasr/error.h"

namespace dasr::ad {

using Shape = std::vector<int>;

inline std::size_t NumElements(const Shape& shape) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

std::string ShapeString(const Shape& shape);

template <typename Real>
class Tape;

template <typename Real>
struct Node {
  Tape<Real>* tape = nullptr;
  Shape shape;
  std::vector<Real> value;
  std::vector<Real> grad;
  bool requires_grad = false;
  // Reads this node's grad and accumulates into the grads of its inputs.
  std::function<void()> backward;
};

// Handle to a tape node. Cheap to copy; valid for the lifetime of its tape.
template <typename Real>
class Var {
 public:
  Var() = default;
  explicit Var(Node<Real>* node) : node_(node) {}

  const Shape& shape() const { return node_->shape; }
  int dim(int i) const { return node_->shape[static_cast<std::size_t>(i)]; }
  int ndim() const { return static_cast<int>(node_->shape.size()); }
  // First axis of a 2-D tensor.
  int rows() const { return ndim() == 1 ? 1 : node_->shape.front(); }
  // Last axis.
  int cols() const { return node_->shape.back(); }
  std::size_t size() const { return node_->value.size(); }

  std::span<const Real> value() const { return node_->value; }
  std::span<Real> grad() const { return node_->grad; }
  Real item() const { return node_->value.front(); }
  bool requires_grad() const { return node_->requires_grad; }
  Node<Real>* node() const { return node_; }
  Tape<Real>& tape() const { return *node_->tape; }
  explicit operator bool() const { return node_ != nullptr; }

 private:
  Node<Real>* node_ = nullptr;
};

// Reverse-mode tape. Nodes are appended in evaluation order, so a reverse walk
// is a valid topological order for backpropagation.
template <typename Real>
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<Real> Constant(Shape shape, std::vector<Real> values) {
    return Make(std::move(shape), std::move(values), false);
  }

  // Leaf whose gradient is accumulated into `grad_sink` on Backward. An empty
  // sink, or requires_grad == false, makes it a constant.
  Var<Real> Leaf(Shape shape, std::span<const Real> values, std::span<Real> grad_sink,
                 bool requires_grad) {
    Var<Real> v = Make(std::move(shape), std::vector<Real>(values.begin(), values.end()),
                       requires_grad && !grad_sink.empty());
    if (v.requires_grad()) {
      Node<Real>* n = v.node();
      n->backward = [n, grad_sink] {
        for (std::size_t i = 0; i < n->grad.size(); ++i) grad_sink[i] += n->grad[i];
      };
    }
    return v;
  }

  Var<Real> Make(Shape shape, std::vector<Real> value, bool requires_grad) {
    if (NumElements(shape) != value.size()) {
      throw Error(ErrorCode::kShape, "value count does not match shape " + ShapeString(shape));
    }
    Node<Real>& n = nodes_.emplace_back();
    n.tape = this;
    n.shape = std::move(shape);
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    return Var<Real>(&n);
  }

  // Seeds d(root)/d(root) = 1 for a single-element root and propagates.
  void Backward(Var<Real> root) {
    if (root.size() != 1) throw Error(ErrorCode::kShape, "Backward needs a scalar root");
    for (auto& n : nodes_) {
      if (n.requires_grad) n.grad.assign(n.value.size(), Real(0));
    }
    if (!root.requires_grad()) return;
    root.node()->grad[0] = Real(1);
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
      if (it->requires_grad && it->backward) it->backward();
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  std::deque<Node<Real>> nodes_;
};

}  // namespace dasr::ad

#endif  // DASR_AD_TAPE_H_
