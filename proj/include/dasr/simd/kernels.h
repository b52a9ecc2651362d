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

#ifndef DASR_SIMD_KERNELS_H_
#define DASR_SIMD_KERNELS_H_

// Arithmetic inner loops shared by the DSP front end and the tensor core.
//
// Every kernel has a portable scalar reference in `scalar::` and, on x86-64,
// an AVX2+FMA variant in `avx2::`. The float entry points dispatch through a
// table chosen once at startup from CPUID; double entry points always use the
// scalar reference (double is only used by finite-difference oracles).
//
// Vector variants reassociate sums, so results agree with the reference to
// rounding, not bit-for-bit. Within one process the selection is fixed, which
// keeps every run on a given machine reproducible.

#include <cstddef>
#include <string_view>

namespace dasr::simd {

enum class Isa { kScalar, kAvx2 };

std::string_view IsaName(Isa isa);

// Best instruction set the running CPU supports and this build compiled.
Isa DetectIsa();
Isa ActiveIsa();
bool IsaSupported(Isa isa);
// Throws dasr::Error(kInvalidParameter) if `isa` is not supported.
void SetIsa(Isa isa);

namespace scalar {
float Dot(const float* a, const float* b, std::size_t n);
void Axpy(float alpha, const float* x, float* y, std::size_t n);
void Mul(const float* a, const float* b, float* out, std::size_t n);
float SumSquares(const float* x, std::size_t n);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define DASR_HAVE_AVX2_KERNELS 1
namespace avx2 {
float Dot(const float* a, const float* b, std::size_t n);
void Axpy(float alpha, const float* x, float* y, std::size_t n);
void Mul(const float* a, const float* b, float* out, std::size_t n);
float SumSquares(const float* x, std::size_t n);
}  // namespace avx2
#endif

float Dot(const float* a, const float* b, std::size_t n);
void Axpy(float alpha, const float* x, float* y, std::size_t n);
void Mul(const float* a, const float* b, float* out, std::size_t n);
float SumSquares(const float* x, std::size_t n);

double Dot(const double* a, const double* b, std::size_t n);
void Axpy(double alpha, const double* x, double* y, std::size_t n);
void Mul(const double* a, const double* b, double* out, std::size_t n);
double SumSquares(const double* x, std::size_t n);

// Row-major dense products, all accumulating into C.
//   GemmNN: C[m x n] += A[m x k] * B[k x n]
//   GemmNT: C[m x n] += A[m x k] * B[n x k]^T
//   GemmTN: C[m x n] += A[k x m]^T * B[k x n]
template <typename Real>
void GemmNN(int m, int n, int k, const Real* a, const Real* b, Real* c) {
  if (n == 1) {
    for (int i = 0; i < m; ++i) c[i] += Dot(a + static_cast<std::size_t>(i) * k, b, k);
    return;
  }
  for (int i = 0; i < m; ++i) {
    const Real* a_row = a + static_cast<std::size_t>(i) * k;
    Real* c_row = c + static_cast<std::size_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      if (a_row[p] != Real(0)) Axpy(a_row[p], b + static_cast<std::size_t>(p) * n, c_row, n);
    }
  }
}

template <typename Real>
void GemmNT(int m, int n, int k, const Real* a, const Real* b, Real* c) {
  for (int i = 0; i < m; ++i) {
    const Real* a_row = a + static_cast<std::size_t>(i) * k;
    Real* c_row = c + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) c_row[j] += Dot(a_row, b + static_cast<std::size_t>(j) * k, k);
  }
}

template <typename Real>
void GemmTN(int m, int n, int k, const Real* a, const Real* b, Real* c) {
  for (int p = 0; p < k; ++p) {
    const Real* a_row = a + static_cast<std::size_t>(p) * m;
    const Real* b_row = b + static_cast<std::size_t>(p) * n;
    for (int i = 0; i < m; ++i) {
      if (a_row[i] != Real(0)) Axpy(a_row[i], b_row, c + static_cast<std::size_t>(i) * n, n);
    }
  }
}

}  // namespace dasr::simd

#endif  // DASR_SIMD_KERNELS_H_
