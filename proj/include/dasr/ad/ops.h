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

#ifndef DASR_AD_OPS_H_
#define DASR_AD_OPS_H_

#include <span>
#include <vector>

#include "dasr/ad/tape.h"

// Differentiable operations. Every op is instantiated for float (training and
// inference) and double (finite-difference gradient checks). Shapes are
// row-major; 2-D tensors are [rows, cols], images are [channels, height, width].

namespace dasr::ad {

// [m, k] x [k, n] -> [m, n]
template <typename Real> Var<Real> MatMul(Var<Real> a, Var<Real> b);
// x[m, k] w[k, n] + b[n] -> [m, n]
template <typename Real> Var<Real> Linear(Var<Real> x, Var<Real> w, Var<Real> b);
template <typename Real> Var<Real> Add(Var<Real> a, Var<Real> b);
// m[r, c] + row[c] broadcast over rows.
template <typename Real> Var<Real> AddRowBroadcast(Var<Real> m, Var<Real> row);
template <typename Real> Var<Real> Mul(Var<Real> a, Var<Real> b);
template <typename Real> Var<Real> Scale(Var<Real> a, Real s);
template <typename Real> Var<Real> Sum(Var<Real> a);

template <typename Real> Var<Real> Tanh(Var<Real> x);
template <typename Real> Var<Real> Sigmoid(Var<Real> x);
template <typename Real> Var<Real> Relu(Var<Real> x);
template <typename Real> Var<Real> SoftmaxRows(Var<Real> x);

template <typename Real> Var<Real> Reshape(Var<Real> x, Shape shape);
template <typename Real> Var<Real> ConcatCols(std::span<const Var<Real>> parts);
template <typename Real> Var<Real> SliceCols(Var<Real> x, int begin, int end);
template <typename Real> Var<Real> StackRows(std::span<const Var<Real>> rows);
template <typename Real> Var<Real> Row(Var<Real> x, int r);
template <typename Real> Var<Real> MeanRows(Var<Real> x);

// Cross-correlation of x[Ci, H, W] with kernels[Co, Ci, kh, kw] plus bias[Co].
// Output extent per axis is floor((in + 2 pad - k) / stride) + 1.
template <typename Real>
Var<Real> Conv2d(Var<Real> x, Var<Real> kernels, Var<Real> bias, int stride, int pad);
// 2x2 window, stride 2, ceil mode: odd extents behave as if padded with -inf.
template <typename Real> Var<Real> MaxPool2d(Var<Real> x);
// [C, T, F] -> [T, C * F], channel-major within each frame.
template <typename Real> Var<Real> ChannelsToFrames(Var<Real> x);

// One LSTM cell given gate pre-activations [1, 4H] in order (i, f, g, o) and
// c_prev [1, H]. Returns [1, 2H] = (h | c).
template <typename Real> Var<Real> LstmCell(Var<Real> gates, Var<Real> c_prev);
// Unidirectional LSTM over x_proj[T, 4H] (input projection + bias already
// applied) with recurrent weights w_h[H, 4H] and zero initial state. With
// `reverse` the sequence is consumed from the last frame; output row t always
// corresponds to input frame t.
template <typename Real>
Var<Real> LstmSequence(Var<Real> x_proj, Var<Real> w_h, bool reverse);

// "Same" 1-D convolution of a[1, U] (or [U]) with filters[C, K], K odd, zero
// padding. Returns [U, C].
template <typename Real> Var<Real> Conv1dSame(Var<Real> a, Var<Real> filters);

// Mean over rows of -log softmax(logits[t])[targets[t]].
template <typename Real>
Var<Real> SoftmaxCrossEntropy(Var<Real> logits, std::span<const int> targets);
// Binary cross-entropy on a single logit.
template <typename Real> Var<Real> BceWithLogits(Var<Real> logit, Real label);
template <typename Real>
Var<Real> MeanSquaredError(Var<Real> pred, std::span<const Real> target);

}  // namespace dasr::ad

#endif  // DASR_AD_OPS_H_
