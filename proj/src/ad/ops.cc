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

#include "dasr/ad/ops.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>
#include <string>

#include "dasr/simd/kernels.h"

namespace dasr::ad {

std::string ShapeString(const Shape& shape) {
  std::ostringstream ss;
  ss << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) ss << (i ? "x" : "") << shape[i];
  ss << ']';
  return ss.str();
}

namespace {

[[noreturn]] void ShapeFail(const char* op, const std::string& detail) {
  throw Error(ErrorCode::kShape, std::string(op) + ": " + detail);
}

template <typename Real>
Real SigmoidScalar(Real x) {
  if (x >= 0) return Real(1) / (Real(1) + std::exp(-x));
  const Real e = std::exp(x);
  return e / (Real(1) + e);
}

template <typename Real>
void Require2d(const char* op, Var<Real> v) {
  if (v.ndim() != 2) ShapeFail(op, "expected a 2-D tensor, got " + ShapeString(v.shape()));
}

}  // namespace

template <typename Real>
Var<Real> MatMul(Var<Real> a, Var<Real> b) {
  Require2d("MatMul", a);
  Require2d("MatMul", b);
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) ShapeFail("MatMul", ShapeString(a.shape()) + " x " + ShapeString(b.shape()));
  std::vector<Real> c(static_cast<std::size_t>(m) * n, Real(0));
  simd::GemmNN(m, n, k, a.value().data(), b.value().data(), c.data());
  Var<Real> out = a.tape().Make({m, n}, std::move(c), a.requires_grad() || b.requires_grad());
  if (out.requires_grad()) {
    auto* pa = a.node();
    auto* pb = b.node();
    auto* po = out.node();
    po->backward = [=] {
      if (pa->requires_grad) simd::GemmNT(m, k, n, po->grad.data(), pb->value.data(), pa->grad.data());
      if (pb->requires_grad) simd::GemmTN(k, n, m, pa->value.data(), po->grad.data(), pb->grad.data());
    };
  }
  return out;
}

template <typename Real>
Var<Real> Linear(Var<Real> x, Var<Real> w, Var<Real> b) {
  Require2d("Linear", x);
  Require2d("Linear", w);
  const int m = x.dim(0), k = x.dim(1), n = w.dim(1);
  if (w.dim(0) != k || static_cast<int>(b.size()) != n) {
    ShapeFail("Linear", ShapeString(x.shape()) + " x " + ShapeString(w.shape()) + " + " +
                            ShapeString(b.shape()));
  }
  std::vector<Real> y(static_cast<std::size_t>(m) * n);
  for (int i = 0; i < m; ++i) std::copy(b.value().begin(), b.value().end(), y.begin() + static_cast<std::ptrdiff_t>(i) * n);
  simd::GemmNN(m, n, k, x.value().data(), w.value().data(), y.data());
  Var<Real> out = x.tape().Make({m, n}, std::move(y),
                                x.requires_grad() || w.requires_grad() || b.requires_grad());
  if (out.requires_grad()) {
    auto* px = x.node();
    auto* pw = w.node();
    auto* pb = b.node();
    auto* po = out.node();
    po->backward = [=] {
      if (px->requires_grad) simd::GemmNT(m, k, n, po->grad.data(), pw->value.data(), px->grad.data());
      if (pw->requires_grad) simd::GemmTN(k, n, m, px->value.data(), po->grad.data(), pw->grad.data());
      if (pb->requires_grad) {
        for (int i = 0; i < m; ++i) {
          simd::Axpy(Real(1), po->grad.data() + static_cast<std::size_t>(i) * n, pb->grad.data(), n);
        }
      }
    };
  }
  return out;
}

template <typename Real>
Var<Real> Add(Var<Real> a, Var<Real> b) {
  if (a.shape() != b.shape()) ShapeFail("Add", ShapeString(a.shape()) + " + " + ShapeString(b.shape()));
  std::vector<Real> y(a.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.value()[i] + b.value()[i];
  Var<Real> out = a.tape().Make(a.shape(), std::move(y), a.requires_grad() || b.requires_grad());
  if (out.requires_grad()) {
    auto* pa = a.node();
    auto* pb = b.node();
    auto* po = out.node();
    po->backward = [=] {
      if (pa->requires_grad) simd::Axpy(Real(1), po->grad.data(), pa->grad.data(), po->grad.size());
      if (pb->requires_grad) simd::Axpy(Real(1), po->grad.data(), pb->grad.data(), po->grad.size());
    };
  }
  return out;
}

template <typename Real>
Var<Real> AddRowBroadcast(Var<Real> m, Var<Real> row) {
  Require2d("AddRowBroadcast", m);
  const int r = m.dim(0), c = m.dim(1);
  if (static_cast<int>(row.size()) != c) {
    ShapeFail("AddRowBroadcast", ShapeString(m.shape()) + " + " + ShapeString(row.shape()));
  }
  std::vector<Real> y(m.value().begin(), m.value().end());
  for (int i = 0; i < r; ++i) simd::Axpy(Real(1), row.value().data(), y.data() + static_cast<std::size_t>(i) * c, c);
  Var<Real> out = m.tape().Make(m.shape(), std::move(y), m.requires_grad() || row.requires_grad());
  if (out.requires_grad()) {
    auto* pm = m.node();
    auto* pr = row.node();
    auto* po = out.node();
    po->backward = [=] {
      if (pm->requires_grad) simd::Axpy(Real(1), po->grad.data(), pm->grad.data(), po->grad.size());
      if (pr->requires_grad) {
        for (int i = 0; i < r; ++i) {
          simd::Axpy(Real(1), po->grad.data() + static_cast<std::size_t>(i) * c, pr->grad.data(), c);
        }
      }
    };
  }
  return out;
}

template <typename Real>
Var<Real> Mul(Var<Real> a, Var<Real> b) {
  if (a.shape() != b.shape()) ShapeFail("Mul", ShapeString(a.shape()) + " * " + ShapeString(b.shape()));
  std::vector<Real> y(a.size());
  simd::Mul(a.value().data(), b.value().data(), y.data(), y.size());
  Var<Real> out = a.tape().Make(a.shape(), std::move(y), a.requires_grad() || b.requires_grad());
  if (out.requires_grad()) {
    auto* pa = a.node();
    auto* pb = b.node();
    auto* po = out.node();
    po->backward = [=] {
      for (std::size_t i = 0; i < po->grad.size(); ++i) {
        if (pa->requires_grad) pa->grad[i] += po->grad[i] * pb->value[i];
        if (pb->requires_grad) pb->grad[i] += po->grad[i] * pa->value[i];
      }
    };
  }
  return out;
}

template <typename Real>
Var<Real> Scale(Var<Real> a, Real s) {
  std::vector<Real> y(a.value().begin(), a.value().end());
  for (Real& v : y) v *= s;
  Var<Real> out = a.tape().Make(a.shape(), std::move(y), a.requires_grad());
  if (out.requires_grad()) {
    auto* pa = a.node();
    auto* po = out.node();
    po->backward = [=] { simd::Axpy(s, po->grad.data(), pa->grad.data(), po->grad.size()); };
  }
  return out;
}

template <typename Real>
Var<Real> Sum(Var<Real> a) {
  Real total = 0;
  for (Real v : a.value()) total += v;
  Var<Real> out = a.tape().Make({1}, {total}, a.requires_grad());
  if (out.requires_grad()) {
    auto* pa = a.node();
    auto* po = out.node();
    po->backward = [=] {
      for (Real& g : pa->grad) g += po->grad[0];
    };
  }
  return out;
}

template <typename Real>
Var<Real> Tanh(Var<Real> x) {
  std::vector<Real> y(x.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::tanh(x.value()[i]);
  Var<Real> out = x.tape().Make(x.shape(), std::move(y), x.requires_grad());
  if (out.requires_grad()) {
    auto* px = x.node();
    auto* po = out.node();
    po->backward = [=] {
      for (std::size_t i = 0; i < po->grad.size(); ++i) {
        px->grad[i] += po->grad[i] * (Real(1) - po->value[i] * po->value[i]);
      }
    };
  }
  return out;
}

template <typename Real>
Var<Real> Sigmoid(Var<Real> x) {
  std::vector<Real> y(x.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = SigmoidScalar(x.value()[i]);
  Var<Real> out = x.tape().Make(x.shape(), std::move(y), x.requires_grad());
  if (out.requires_grad()) {
    auto* px = x.node();
    auto* po = out.node();
    po->backward = [=] {
      for (std::size_t i = 0; i < po->grad.size(); ++i) {
        px->grad[i] += po->grad[i] * po->value[i] * (Real(1) - po->value[i]);
      }
    };
  }
  return out;
}

template <typename Real>
Var<Real> Relu(Var<Real> x) {
  std::vector<Real> y(x.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::max(x.value()[i], Real(0));
  Var<Real> out = x.tape().Make(x.shape(), std::move(y), x.requires_grad());
  if (out.requires_grad()) {
    auto* px = x.node();
    auto* po = out.node();
    po->backward = [=] {
      for (std::size_t i = 0; i < po->grad.size(); ++i) {
        if (px->value[i] > Real(0)) px->grad[i] += po->grad[i];
      }
    };
  }
  return out;
}

template <typename Real>
Var<Real> SoftmaxRows(Var<Real> x) {
  const int r = x.rows(), c = x.cols();
  std::vector<Real> y(x.size());
  for (int i = 0; i < r; ++i) {
    const Real* in = x.value().data() + static_cast<std::size_t>(i) * c;
    Real* o = y.data() + static_cast<std::size_t>(i) * c;
    const Real mx = *std::max_element(in, in + c);
    Real total = 0;
    for (int j = 0; j < c; ++j) {
      o[j] = std::exp(in[j] - mx);
      total += o[j];
    }
    for (int j = 0; j < c; ++j) o[j] /= total;
  }
  Var<Real> out = x.tape().Make(x.shape(), std::move(y), x.requires_grad());
  if (out.requires_grad()) {
    auto* px = x.node();
    auto* po = out.node();
    po->backward = [=] {
      for (int i = 0; i < r; ++i) {
        const std::size_t off = static_cast<std::size_t>(i) * c;
        const Real dot = simd::Dot(po->grad.data() + off, po->value.data() + off, c);
        for (int j = 0; j < c; ++j) {
          px->grad[off + j] += po->value[off + j] * (po->grad[off + j] - dot);
        }
      }
    };
  }
  return out;
}

template <typename Real>
Var<Real> Reshape(Var<Real> x, Shape shape) {
  if (NumElements(shape) != x.size()) {
    ShapeFail("Reshape", ShapeString(x.shape()) + " -> " + ShapeString(shape));
  }
  Var<Real> out = x.tape().Make(std::move(shape), std::vector<Real>(x.value().begin(), x.value().end()),
                                x.requires_grad());
  if (out.requires_grad()) {
    auto* px = x.node();
    auto* po = out.node();
    po->backward = [=] { simd::Axpy(Real(1), po->grad.data(), px->grad.data(), po->grad.size()); };
  }
  return out;
}

template <typename Real>
Var<Real> ConcatCols(std::span<const Var<Real>> parts) {
  if (parts.empty()) ShapeFail("ConcatCols", "no inputs");
  const int r = parts[0].rows();
  int total = 0;
  bool any_grad = false;
  for (const auto& p : parts) {
    if (p.rows() != r || p.ndim() > 2) ShapeFail("ConcatCols", "row mismatch " + ShapeString(p.shape()));
    total += p.cols();
    any_grad = any_grad || p.requires_grad();
  }
  std::vector<Real> y(static_cast<std::size_t>(r) * total);
  int offset = 0;
  for (const auto& p : parts) {
    const int c = p.cols();
    for (int i = 0; i < r; ++i) {
      std::copy_n(p.value().data() + static_cast<std::size_t>(i) * c, c,
                  y.data() + static_cast<std::size_t>(i) * total + offset);
    }
    offset += c;
  }
  Var<Real> out = parts[0].tape().Make({r, total}, std::move(y), any_grad);
  if (out.requires_grad()) {
    std::vector<Node<Real>*> nodes;
    for (const auto& p : parts) nodes.push_back(p.node());
    auto* po = out.node();
    po->backward = [=] {
      int off = 0;
      for (auto* pn : nodes) {
        const int c = pn->shape.back();
        if (pn->requires_grad) {
          for (int i = 0; i < r; ++i) {
            simd::Axpy(Real(1), po->grad.data() + static_cast<std::size_t>(i) * total + off,
                       pn->grad.data() + static_cast<std::size_t>(i) * c, c);
          }
        }
        off += c;
      }
    };
  }
  return out;
}

template <typename Real>
Var<Real> SliceCols(Var<Real> x, int begin, int end) {
  const int r = x.rows(), c = x.cols();
  if (begin < 0 || end > c || begin >= end) ShapeFail("SliceCols", "bad column range");
  const int w = end - begin;
  std::vector<Real> y(static_cast<std::size_t>(r) * w);
  for (int i = 0; i < r; ++i) {
    std::copy_n(x.value().data() + static_cast<std::size_t>(i) * c + begin, w,
                y.data() + static_cast<std::size_t>(i) * w);
  }
  Var<Real> out = x.tape().Make({r, w}, std::move(y), x.requires_grad());
  if (out.requires_grad()) {
    auto* px = x.node();
    auto* po = out.node();
    po->backward = [=] {
      for (int i = 0; i < r; ++i) {
        simd::Axpy(Real(1), po->grad.data() + static_cast<std::size_t>(i) * w,
                   px->grad.data() + static_cast<std::size_t>(i) * c + begin, w);
      }
    };
  }
  return out;
}

template <typename Real>
Var<Real> StackRows(std::span<const Var<Real>> rows) {
  if (rows.empty()) ShapeFail("StackRows", "no inputs");
  const int d = static_cast<int>(rows[0].size());
  bool any_grad = false;
  std::vector<Real> y;
  y.reserve(rows.size() * static_cast<std::size_t>(d));
  for (const auto& r : rows) {
    if (static_cast<int>(r.size()) != d) ShapeFail("StackRows", "row length mismatch");
    y.insert(y.end(), r.value().begin(), r.value().end());
    any_grad = any_grad || r.requires_grad();
  }
  const int n = static_cast<int>(rows.size());
  Var<Real> out = rows[0].tape().Make({n, d}, std::move(y), any_grad);
  if (out.requires_grad()) {
    std::vector<Node<Real>*> nodes;
    for (const auto& r : rows) nodes.push_back(r.node());
    auto* po = out.node();
    po->backward = [=] {
      for (int i = 0; i < n; ++i) {
        if (nodes[i]->requires_grad) {
          simd::Axpy(Real(1), po->grad.data() + static_cast<std::size_t>(i) * d, nodes[i]->grad.data(), d);
        }
      }
    };
  }
  return out;
}

template <typename Real>
Var<Real> Row(Var<Real> x, int r) {
  const int c = x.cols();
  if (r < 0 || r >= x.rows()) throw Error(ErrorCode::kIndex, "Row: index out of range");
  std::vector<Real> y(x.value().begin() + static_cast<std::ptrdiff_t>(r) * c,
                      x.value().begin() + static_cast<std::ptrdiff_t>(r + 1) * c);
  Var<Real> out = x.tape().Make({1, c}, std::move(y), x.requires_grad());
  if (out.requires_grad()) {
    auto* px = x.node();
    auto* po = out.node();
    po->backward = [=] {
      simd::Axpy(Real(1), po->grad.data(), px->grad.data() + static_cast<std::size_t>(r) * c, c);
    };
  }
  return out;
}

template <typename Real>
Var<Real> MeanRows(Var<Real> x) {
  const int r = x.rows(), c = x.cols();
  if (r < 1) ShapeFail("MeanRows", "no rows");
  std::vector<Real> y(c, Real(0));
  const Real inv = Real(1) / static_cast<Real>(r);
  for (int i = 0; i < r; ++i) simd::Axpy(inv, x.value().data() + static_cast<std::size_t>(i) * c, y.data(), c);
  Var<Real> out = x.tape().Make({1, c}, std::move(y), x.requires_grad());
  if (out.requires_grad()) {
    auto* px = x.node();
    auto* po = out.node();
    po->backward = [=] {
      for (int i = 0; i < r; ++i) {
        simd::Axpy(inv, po->grad.data(), px->grad.data() + static_cast<std::size_t>(i) * c, c);
      }
    };
  }
  return out;
}

template <typename Real>
Var<Real> Conv2d(Var<Real> x, Var<Real> kernels, Var<Real> bias, int stride, int pad) {
  if (x.ndim() != 3 || kernels.ndim() != 4) {
    ShapeFail("Conv2d", ShapeString(x.shape()) + " * " + ShapeString(kernels.shape()));
  }
  const int ci = x.dim(0), h = x.dim(1), w = x.dim(2);
  const int co = kernels.dim(0), kh = kernels.dim(2), kw = kernels.dim(3);
  if (kernels.dim(1) != ci || static_cast<int>(bias.size()) != co || stride < 1 || pad < 0) {
    ShapeFail("Conv2d", "channel mismatch " + ShapeString(x.shape()) + " * " + ShapeString(kernels.shape()));
  }
  if (h + 2 * pad < kh || w + 2 * pad < kw) ShapeFail("Conv2d", "kernel larger than padded input");
  const int ho = (h + 2 * pad - kh) / stride + 1;
  const int wo = (w + 2 * pad - kw) / stride + 1;
  const int patch = ci * kh * kw;
  const int positions = ho * wo;

  auto cols = std::make_shared<std::vector<Real>>(static_cast<std::size_t>(patch) * positions, Real(0));
  const Real* xv = x.value().data();
  for (int c = 0; c < ci; ++c) {
    for (int ki = 0; ki < kh; ++ki) {
      for (int kj = 0; kj < kw; ++kj) {
        Real* dst = cols->data() + static_cast<std::size_t>((c * kh + ki) * kw + kj) * positions;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * stride + ki - pad;
          if (iy < 0 || iy >= h) continue;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * stride + kj - pad;
            if (ix >= 0 && ix < w) dst[oy * wo + ox] = xv[(static_cast<std::size_t>(c) * h + iy) * w + ix];
          }
        }
      }
    }
  }
  std::vector<Real> y(static_cast<std::size_t>(co) * positions);
  for (int o = 0; o < co; ++o) {
    std::fill_n(y.begin() + static_cast<std::ptrdiff_t>(o) * positions, positions, bias.value()[o]);
  }
  simd::GemmNN(co, positions, patch, kernels.value().data(), cols->data(), y.data());
  Var<Real> out = x.tape().Make({co, ho, wo}, std::move(y),
                                x.requires_grad() || kernels.requires_grad() || bias.requires_grad());
  if (out.requires_grad()) {
    auto* px = x.node();
    auto* pk = kernels.node();
    auto* pb = bias.node();
    auto* po = out.node();
    po->backward = [=] {
      const Real* dy = po->grad.data();
      if (pk->requires_grad) simd::GemmNT(co, patch, positions, dy, cols->data(), pk->grad.data());
      if (pb->requires_grad) {
        for (int o = 0; o < co; ++o) {
          Real s = 0;
          for (int p = 0; p < positions; ++p) s += dy[static_cast<std::size_t>(o) * positions + p];
          pb->grad[o] += s;
        }
      }
      if (px->requires_grad) {
        std::vector<Real> dcols(static_cast<std::size_t>(patch) * positions, Real(0));
        simd::GemmTN(patch, positions, co, pk->value.data(), dy, dcols.data());
        Real* dx = px->grad.data();
        for (int c = 0; c < ci; ++c) {
          for (int ki = 0; ki < kh; ++ki) {
            for (int kj = 0; kj < kw; ++kj) {
              const Real* src = dcols.data() + static_cast<std::size_t>((c * kh + ki) * kw + kj) * positions;
              for (int oy = 0; oy < ho; ++oy) {
                const int iy = oy * stride + ki - pad;
                if (iy < 0 || iy >= h) continue;
                for (int ox = 0; ox < wo; ++ox) {
                  const int ix = ox * stride + kj - pad;
                  if (ix >= 0 && ix < w) dx[(static_cast<std::size_t>(c) * h + iy) * w + ix] += src[oy * wo + ox];
                }
              }
            }
          }
        }
      }
    };
  }
  return out;
}

template <typename Real>
Var<Real> MaxPool2d(Var<Real> x) {
  if (x.ndim() != 3) ShapeFail("MaxPool2d", "expected [C, H, W], got " + ShapeString(x.shape()));
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  if (h < 2 || w < 2) ShapeFail("MaxPool2d", "input smaller than the 2x2 window");
  const int ho = (h + 1) / 2, wo = (w + 1) / 2;
  std::vector<Real> y(static_cast<std::size_t>(c) * ho * wo);
  auto argmax = std::make_shared<std::vector<std::size_t>>(y.size());
  const Real* xv = x.value().data();
  for (int ch = 0; ch < c; ++ch) {
    for (int oy = 0; oy < ho; ++oy) {
      for (int ox = 0; ox < wo; ++ox) {
        Real best = -std::numeric_limits<Real>::infinity();
        std::size_t best_idx = 0;
        for (int dy = 0; dy < 2; ++dy) {
          for (int dx = 0; dx < 2; ++dx) {
            const int iy = 2 * oy + dy, ix = 2 * ox + dx;
            if (iy >= h || ix >= w) continue;
            const std::size_t idx = (static_cast<std::size_t>(ch) * h + iy) * w + ix;
            if (xv[idx] > best) {
              best = xv[idx];
              best_idx = idx;
            }
          }
        }
        const std::size_t o = (static_cast<std::size_t>(ch) * ho + oy) * wo + ox;
        y[o] = best;
        (*argmax)[o] = best_idx;
      }
    }
  }
  Var<Real> out = x.tape().Make({c, ho, wo}, std::move(y), x.requires_grad());
  if (out.requires_grad()) {
    auto* px = x.node();
    auto* po = out.node();
    po->backward = [=] {
      for (std::size_t o = 0; o < po->grad.size(); ++o) px->grad[(*argmax)[o]] += po->grad[o];
    };
  }
  return out;
}

template <typename Real>
Var<Real> ChannelsToFrames(Var<Real> x) {
  if (x.ndim() != 3) ShapeFail("ChannelsToFrames", "expected [C, T, F], got " + ShapeString(x.shape()));
  const int c = x.dim(0), t = x.dim(1), f = x.dim(2);
  std::vector<Real> y(x.size());
  for (int ch = 0; ch < c; ++ch) {
    for (int i = 0; i < t; ++i) {
      std::copy_n(x.value().data() + (static_cast<std::size_t>(ch) * t + i) * f, f,
                  y.data() + static_cast<std::size_t>(i) * c * f + static_cast<std::size_t>(ch) * f);
    }
  }
  Var<Real> out = x.tape().Make({t, c * f}, std::move(y), x.requires_grad());
  if (out.requires_grad()) {
    auto* px = x.node();
    auto* po = out.node();
    po->backward = [=] {
      for (int ch = 0; ch < c; ++ch) {
        for (int i = 0; i < t; ++i) {
          simd::Axpy(Real(1), po->grad.data() + static_cast<std::size_t>(i) * c * f + static_cast<std::size_t>(ch) * f,
                     px->grad.data() + (static_cast<std::size_t>(ch) * t + i) * f, f);
        }
      }
    };
  }
  return out;
}

namespace {

// Gate activations and cell state for one LSTM step.
template <typename Real>
struct CellCache {
  std::vector<Real> i, f, g, o, c, tanh_c;
};

template <typename Real>
void CellForward(const Real* a, const Real* c_prev, int hidden, CellCache<Real>& k, Real* h_out) {
  k.i.resize(hidden);
  k.f.resize(hidden);
  k.g.resize(hidden);
  k.o.resize(hidden);
  k.c.resize(hidden);
  k.tanh_c.resize(hidden);
  for (int j = 0; j < hidden; ++j) {
    k.i[j] = SigmoidScalar(a[j]);
    k.f[j] = SigmoidScalar(a[hidden + j]);
    k.g[j] = std::tanh(a[2 * hidden + j]);
    k.o[j] = SigmoidScalar(a[3 * hidden + j]);
    k.c[j] = k.f[j] * c_prev[j] + k.i[j] * k.g[j];
    k.tanh_c[j] = std::tanh(k.c[j]);
    h_out[j] = k.o[j] * k.tanh_c[j];
  }
}

// Given dh and dc for this step, writes gate pre-activation grads and returns
// the gradient flowing into c_prev through `dc_prev`.
template <typename Real>
void CellBackward(const CellCache<Real>& k, const Real* c_prev, const Real* dh, const Real* dc, int hidden,
                  Real* da, Real* dc_prev) {
  for (int j = 0; j < hidden; ++j) {
    const Real dct = dc[j] + dh[j] * k.o[j] * (Real(1) - k.tanh_c[j] * k.tanh_c[j]);
    const Real di = dct * k.g[j];
    const Real df = dct * c_prev[j];
    const Real dg = dct * k.i[j];
    const Real d_o = dh[j] * k.tanh_c[j];
    da[j] = di * k.i[j] * (Real(1) - k.i[j]);
    da[hidden + j] = df * k.f[j] * (Real(1) - k.f[j]);
    da[2 * hidden + j] = dg * (Real(1) - k.g[j] * k.g[j]);
    da[3 * hidden + j] = d_o * k.o[j] * (Real(1) - k.o[j]);
    dc_prev[j] = dct * k.f[j];
  }
}

}  // namespace

template <typename Real>
Var<Real> LstmCell(Var<Real> gates, Var<Real> c_prev) {
  const int hidden = static_cast<int>(c_prev.size());
  if (static_cast<int>(gates.size()) != 4 * hidden) {
    ShapeFail("LstmCell", ShapeString(gates.shape()) + " gates for " + ShapeString(c_prev.shape()) + " cell");
  }
  auto cache = std::make_shared<CellCache<Real>>();
  std::vector<Real> y(2 * static_cast<std::size_t>(hidden));
  CellForward(gates.value().data(), c_prev.value().data(), hidden, *cache, y.data());
  std::copy(cache->c.begin(), cache->c.end(), y.begin() + hidden);
  Var<Real> out = gates.tape().Make({1, 2 * hidden}, std::move(y),
                                    gates.requires_grad() || c_prev.requires_grad());
  if (out.requires_grad()) {
    auto* pg = gates.node();
    auto* pc = c_prev.node();
    auto* po = out.node();
    po->backward = [=] {
      std::vector<Real> da(4 * static_cast<std::size_t>(hidden));
      std::vector<Real> dc_prev(hidden);
      CellBackward(*cache, pc->value.data(), po->grad.data(), po->grad.data() + hidden, hidden, da.data(),
                   dc_prev.data());
      if (pg->requires_grad) simd::Axpy(Real(1), da.data(), pg->grad.data(), da.size());
      if (pc->requires_grad) simd::Axpy(Real(1), dc_prev.data(), pc->grad.data(), dc_prev.size());
    };
  }
  return out;
}

template <typename Real>
Var<Real> LstmSequence(Var<Real> x_proj, Var<Real> w_h, bool reverse) {
  Require2d("LstmSequence", x_proj);
  Require2d("LstmSequence", w_h);
  const int steps = x_proj.dim(0);
  const int hidden = w_h.dim(0);
  if (w_h.dim(1) != 4 * hidden || x_proj.dim(1) != 4 * hidden) {
    ShapeFail("LstmSequence", ShapeString(x_proj.shape()) + " with recurrent " + ShapeString(w_h.shape()));
  }
  if (steps < 1) ShapeFail("LstmSequence", "empty sequence");
  const int g4 = 4 * hidden;
  auto caches = std::make_shared<std::vector<CellCache<Real>>>(steps);
  std::vector<Real> y(static_cast<std::size_t>(steps) * hidden);
  std::vector<Real> a(g4);
  const std::vector<Real> zeros(hidden, Real(0));
  for (int s = 0; s < steps; ++s) {
    const int t = reverse ? steps - 1 - s : s;
    const int t_prev = reverse ? t + 1 : t - 1;
    std::copy_n(x_proj.value().data() + static_cast<std::size_t>(t) * g4, g4, a.begin());
    const Real* h_prev = s == 0 ? zeros.data() : y.data() + static_cast<std::size_t>(t_prev) * hidden;
    const Real* c_prev = s == 0 ? zeros.data() : (*caches)[t_prev].c.data();
    simd::GemmNN(1, g4, hidden, h_prev, w_h.value().data(), a.data());
    CellForward(a.data(), c_prev, hidden, (*caches)[t], y.data() + static_cast<std::size_t>(t) * hidden);
  }
  Var<Real> out = x_proj.tape().Make({steps, hidden}, std::move(y),
                                     x_proj.requires_grad() || w_h.requires_grad());
  if (out.requires_grad()) {
    auto* px = x_proj.node();
    auto* pw = w_h.node();
    auto* po = out.node();
    po->backward = [=] {
      std::vector<Real> dh(hidden, Real(0)), dc(hidden, Real(0)), dc_prev(hidden), da(g4);
      const std::vector<Real> zero_state(hidden, Real(0));
      for (int s = steps - 1; s >= 0; --s) {
        const int t = reverse ? steps - 1 - s : s;
        const int t_prev = reverse ? t + 1 : t - 1;
        for (int j = 0; j < hidden; ++j) dh[j] += po->grad[static_cast<std::size_t>(t) * hidden + j];
        const Real* h_prev = s == 0 ? zero_state.data() : po->value.data() + static_cast<std::size_t>(t_prev) * hidden;
        const Real* c_prev = s == 0 ? zero_state.data() : (*caches)[t_prev].c.data();
        CellBackward((*caches)[t], c_prev, dh.data(), dc.data(), hidden, da.data(), dc_prev.data());
        if (px->requires_grad) simd::Axpy(Real(1), da.data(), px->grad.data() + static_cast<std::size_t>(t) * g4, g4);
        if (pw->requires_grad) simd::GemmTN(hidden, g4, 1, h_prev, da.data(), pw->grad.data());
        std::fill(dh.begin(), dh.end(), Real(0));
        simd::GemmNT(1, hidden, g4, da.data(), pw->value.data(), dh.data());
        dc.swap(dc_prev);
      }
    };
  }
  return out;
}

template <typename Real>
Var<Real> Conv1dSame(Var<Real> a, Var<Real> filters) {
  Require2d("Conv1dSame", filters);
  const int u = static_cast<int>(a.size());
  const int channels = filters.dim(0), k = filters.dim(1);
  if (k % 2 == 0) ShapeFail("Conv1dSame", "kernel width must be odd");
  const int half = k / 2;
  std::vector<Real> y(static_cast<std::size_t>(u) * channels, Real(0));
  const Real* av = a.value().data();
  const Real* fv = filters.value().data();
  for (int p = 0; p < u; ++p) {
    for (int c = 0; c < channels; ++c) {
      Real s = 0;
      for (int j = 0; j < k; ++j) {
        const int src = p + j - half;
        if (src >= 0 && src < u) s += fv[c * k + j] * av[src];
      }
      y[static_cast<std::size_t>(p) * channels + c] = s;
    }
  }
  Var<Real> out = a.tape().Make({u, channels}, std::move(y), a.requires_grad() || filters.requires_grad());
  if (out.requires_grad()) {
    auto* pa = a.node();
    auto* pf = filters.node();
    auto* po = out.node();
    po->backward = [=] {
      for (int p = 0; p < u; ++p) {
        for (int c = 0; c < channels; ++c) {
          const Real g = po->grad[static_cast<std::size_t>(p) * channels + c];
          if (g == Real(0)) continue;
          for (int j = 0; j < k; ++j) {
            const int src = p + j - half;
            if (src < 0 || src >= u) continue;
            if (pf->requires_grad) pf->grad[c * k + j] += g * pa->value[src];
            if (pa->requires_grad) pa->grad[src] += g * pf->value[c * k + j];
          }
        }
      }
    };
  }
  return out;
}

template <typename Real>
Var<Real> SoftmaxCrossEntropy(Var<Real> logits, std::span<const int> targets) {
  const int t = logits.rows(), v = logits.cols();
  if (static_cast<int>(targets.size()) != t) ShapeFail("SoftmaxCrossEntropy", "one target per row required");
  auto probs = std::make_shared<std::vector<Real>>(logits.size());
  Real loss = 0;
  for (int i = 0; i < t; ++i) {
    if (targets[i] < 0 || targets[i] >= v) {
      throw Error(ErrorCode::kIndex, "target id " + std::to_string(targets[i]) + " outside [0, " +
                                         std::to_string(v) + ")");
    }
    const Real* in = logits.value().data() + static_cast<std::size_t>(i) * v;
    Real* p = probs->data() + static_cast<std::size_t>(i) * v;
    const Real mx = *std::max_element(in, in + v);
    Real total = 0;
    for (int j = 0; j < v; ++j) {
      p[j] = std::exp(in[j] - mx);
      total += p[j];
    }
    for (int j = 0; j < v; ++j) p[j] /= total;
    loss += -(in[targets[i]] - mx - std::log(total));
  }
  loss /= static_cast<Real>(t);
  Var<Real> out = logits.tape().Make({1}, {loss}, logits.requires_grad());
  if (out.requires_grad()) {
    auto* pl = logits.node();
    auto* po = out.node();
    std::vector<int> tgt(targets.begin(), targets.end());
    po->backward = [=] {
      const Real scale = po->grad[0] / static_cast<Real>(t);
      for (int i = 0; i < t; ++i) {
        for (int j = 0; j < v; ++j) {
          const std::size_t idx = static_cast<std::size_t>(i) * v + j;
          pl->grad[idx] += scale * ((*probs)[idx] - (j == tgt[i] ? Real(1) : Real(0)));
        }
      }
    };
  }
  return out;
}

template <typename Real>
Var<Real> BceWithLogits(Var<Real> logit, Real label) {
  if (logit.size() != 1) ShapeFail("BceWithLogits", "expected a single logit");
  const Real z = logit.item();
  const Real loss = std::max(z, Real(0)) - label * z + std::log1p(std::exp(-std::abs(z)));
  Var<Real> out = logit.tape().Make({1}, {loss}, logit.requires_grad());
  if (out.requires_grad()) {
    auto* pl = logit.node();
    auto* po = out.node();
    po->backward = [=] { pl->grad[0] += po->grad[0] * (SigmoidScalar(z) - label); };
  }
  return out;
}

template <typename Real>
Var<Real> MeanSquaredError(Var<Real> pred, std::span<const Real> target) {
  if (pred.size() != target.size()) ShapeFail("MeanSquaredError", "prediction/target size mismatch");
  const std::size_t n = pred.size();
  Real loss = 0;
  for (std::size_t i = 0; i < n; ++i) loss += (pred.value()[i] - target[i]) * (pred.value()[i] - target[i]);
  loss /= static_cast<Real>(n);
  Var<Real> out = pred.tape().Make({1}, {loss}, pred.requires_grad());
  if (out.requires_grad()) {
    auto* pp = pred.node();
    auto* po = out.node();
    std::vector<Real> tgt(target.begin(), target.end());
    po->backward = [=] {
      for (std::size_t i = 0; i < n; ++i) {
        pp->grad[i] += po->grad[0] * Real(2) * (pp->value[i] - tgt[i]) / static_cast<Real>(n);
      }
    };
  }
  return out;
}

#define DASR_INSTANTIATE_OPS(Real)                                                               \
  template Var<Real> MatMul(Var<Real>, Var<Real>);                                               \
  template Var<Real> Linear(Var<Real>, Var<Real>, Var<Real>);                                    \
  template Var<Real> Add(Var<Real>, Var<Real>);                                                  \
  template Var<Real> AddRowBroadcast(Var<Real>, Var<Real>);                                      \
  template Var<Real> Mul(Var<Real>, Var<Real>);                                                  \
  template Var<Real> Scale(Var<Real>, Real);                                                     \
  template Var<Real> Sum(Var<Real>);                                                             \
  template Var<Real> Tanh(Var<Real>);                                                            \
  template Var<Real> Sigmoid(Var<Real>);                                                         \
  template Var<Real> Relu(Var<Real>);                                                            \
  template Var<Real> SoftmaxRows(Var<Real>);                                                     \
  template Var<Real> Reshape(Var<Real>, Shape);                                                  \
  template Var<Real> ConcatCols(std::span<const Var<Real>>);                                     \
  template Var<Real> SliceCols(Var<Real>, int, int);                                             \
  template Var<Real> StackRows(std::span<const Var<Real>>);                                      \
  template Var<Real> Row(Var<Real>, int);                                                        \
  template Var<Real> MeanRows(Var<Real>);                                                        \
  template Var<Real> Conv2d(Var<Real>, Var<Real>, Var<Real>, int, int);                          \
  template Var<Real> MaxPool2d(Var<Real>);                                                       \
  template Var<Real> ChannelsToFrames(Var<Real>);                                                \
  template Var<Real> LstmCell(Var<Real>, Var<Real>);                                             \
  template Var<Real> LstmSequence(Var<Real>, Var<Real>, bool);                                   \
  template Var<Real> Conv1dSame(Var<Real>, Var<Real>);                                           \
  template Var<Real> SoftmaxCrossEntropy(Var<Real>, std::span<const int>);                       \
  template Var<Real> BceWithLogits(Var<Real>, Real);                                             \
  template Var<Real> MeanSquaredError(Var<Real>, std::span<const Real>);

DASR_INSTANTIATE_OPS(float)
DASR_INSTANTIATE_OPS(double)

#undef DASR_INSTANTIATE_OPS

}  // namespace dasr::ad
