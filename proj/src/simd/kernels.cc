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

#include "dasr/simd/kernels.h"

#include "dasr/error.h"

namespace dasr::simd {

namespace scalar {

float Dot(const float* a, const float* b, std::size_t n) {
  float sum = 0.0f;
  for (std::size_t i = 0; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void Axpy(float alpha, const float* x, float* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void Mul(const float* a, const float* b, float* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

float SumSquares(const float* x, std::size_t n) {
  float sum = 0.0f;
  for (std::size_t i = 0; i < n; ++i) sum += x[i] * x[i];
  return sum;
}

}  // namespace scalar

namespace {

struct KernelTable {
  float (*dot)(const float*, const float*, std::size_t);
  void (*axpy)(float, const float*, float*, std::size_t);
  void (*mul)(const float*, const float*, float*, std::size_t);
  float (*sum_squares)(const float*, std::size_t);
};

constexpr KernelTable kScalarTable{scalar::Dot, scalar::Axpy, scalar::Mul,
                                   scalar::SumSquares};
#ifdef DASR_HAVE_AVX2_KERNELS
constexpr KernelTable kAvx2Table{avx2::Dot, avx2::Axpy, avx2::Mul,
                                 avx2::SumSquares};
#endif

bool CpuHasAvx2() {
#if defined(DASR_HAVE_AVX2_KERNELS) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable& TableFor(Isa isa) {
#ifdef DASR_HAVE_AVX2_KERNELS
  if (isa == Isa::kAvx2) return kAvx2Table;
#endif
  (void)isa;
  return kScalarTable;
}

struct Dispatch {
  Isa isa;
  const KernelTable* table;
};

Dispatch& State() {
  static Dispatch state{DetectIsa(), &TableFor(DetectIsa())};
  return state;
}

}  // namespace

std::string_view IsaName(Isa isa) {
  switch (isa) {
    case Isa::kScalar: return "scalar";
    case Isa::kAvx2: return "avx2";
  }
  return "unknown";
}

bool IsaSupported(Isa isa) {
  if (isa == Isa::kScalar) return true;
  return CpuHasAvx2();
}

Isa DetectIsa() {
  static const Isa detected = CpuHasAvx2() ? Isa::kAvx2 : Isa::kScalar;
  return detected;
}

Isa ActiveIsa() { return State().isa; }

void SetIsa(Isa isa) {
  if (!IsaSupported(isa)) {
    throw Error(ErrorCode::kInvalidParameter,
                std::string("instruction set not supported: ") + std::string(IsaName(isa)));
  }
  State() = Dispatch{isa, &TableFor(isa)};
}

float Dot(const float* a, const float* b, std::size_t n) { return State().table->dot(a, b, n); }
void Axpy(float alpha, const float* x, float* y, std::size_t n) { State().table->axpy(alpha, x, y, n); }
void Mul(const float* a, const float* b, float* out, std::size_t n) { State().table->mul(a, b, out, n); }
float SumSquares(const float* x, std::size_t n) { return State().table->sum_squares(x, n); }

double Dot(const double* a, const double* b, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void Axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void Mul(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

double SumSquares(const double* x, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += x[i] * x[i];
  return sum;
}

}  // namespace dasr::simd
