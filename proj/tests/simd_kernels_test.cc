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

#include <cmath>
#include <random>
#include <vector>

#include "gtest/gtest.h"

namespace dasr::simd {
namespace {

std::vector<float> RandomVector(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<float> dist(-2.0f, 2.0f);
  std::vector<float> v(n);
  for (float& x : v) x = dist(rng);
  return v;
}

// Restores the process-wide selection after each test.
class IsaGuard {
 public:
  IsaGuard() : saved_(ActiveIsa()) {}
  ~IsaGuard() { SetIsa(saved_); }

 private:
  Isa saved_;
};

TEST(SimdKernelsTest, ScalarIsAlwaysSupported) {
  EXPECT_TRUE(IsaSupported(Isa::kScalar));
  EXPECT_TRUE(IsaSupported(DetectIsa()));
}

#ifdef DASR_HAVE_AVX2_KERNELS
TEST(SimdKernelsTest, Avx2MatchesScalarReference) {
  if (!IsaSupported(Isa::kAvx2)) GTEST_SKIP() << "CPU lacks AVX2/FMA";
  std::mt19937_64 rng(7);
  for (std::size_t n = 0; n < 150; ++n) {
    const auto a = RandomVector(rng, n);
    const auto b = RandomVector(rng, n);
    const float ref = scalar::Dot(a.data(), b.data(), n);
    const float vec = avx2::Dot(a.data(), b.data(), n);
    EXPECT_NEAR(vec, ref, 1e-5f * (1.0f + static_cast<float>(n))) << "dot n=" << n;
    EXPECT_NEAR(avx2::SumSquares(a.data(), n), scalar::SumSquares(a.data(), n), 1e-5f * (1.0f + n));

    auto y_ref = b;
    auto y_vec = b;
    scalar::Axpy(0.37f, a.data(), y_ref.data(), n);
    avx2::Axpy(0.37f, a.data(), y_vec.data(), n);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(y_vec[i], y_ref[i], 1e-6f);

    std::vector<float> m_ref(n), m_vec(n);
    scalar::Mul(a.data(), b.data(), m_ref.data(), n);
    avx2::Mul(a.data(), b.data(), m_vec.data(), n);
    EXPECT_EQ(m_ref, m_vec);
  }
}

TEST(SimdKernelsTest, DispatchFollowsSelection) {
  if (!IsaSupported(Isa::kAvx2)) GTEST_SKIP() << "CPU lacks AVX2/FMA";
  IsaGuard guard;
  std::mt19937_64 rng(3);
  const auto a = RandomVector(rng, 1001);
  const auto b = RandomVector(rng, 1001);
  SetIsa(Isa::kScalar);
  EXPECT_EQ(Dot(a.data(), b.data(), a.size()), scalar::Dot(a.data(), b.data(), a.size()));
  SetIsa(Isa::kAvx2);
  EXPECT_EQ(Dot(a.data(), b.data(), a.size()), avx2::Dot(a.data(), b.data(), a.size()));
}
#endif

// Triple-loop reference for the three GEMM layouts, evaluated in double.
TEST(SimdKernelsTest, GemmLayoutsMatchNaiveProducts) {
  std::mt19937_64 rng(11);
  for (Isa isa : {Isa::kScalar, DetectIsa()}) {
    IsaGuard guard;
    SetIsa(isa);
    for (int trial = 0; trial < 20; ++trial) {
      const int m = 1 + static_cast<int>(rng() % 9);
      const int n = 1 + static_cast<int>(rng() % 40);
      const int k = 1 + static_cast<int>(rng() % 17);
      const auto a = RandomVector(rng, static_cast<std::size_t>(m) * k);
      const auto b = RandomVector(rng, static_cast<std::size_t>(k) * n);
      const auto bt = RandomVector(rng, static_cast<std::size_t>(n) * k);
      const auto at = RandomVector(rng, static_cast<std::size_t>(k) * m);
      std::vector<float> nn(static_cast<std::size_t>(m) * n, 0.5f), nt = nn, tn = nn;
      GemmNN(m, n, k, a.data(), b.data(), nn.data());
      GemmNT(m, n, k, a.data(), bt.data(), nt.data());
      GemmTN(m, n, k, at.data(), b.data(), tn.data());
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
          double r_nn = 0.5, r_nt = 0.5, r_tn = 0.5;
          for (int p = 0; p < k; ++p) {
            r_nn += static_cast<double>(a[i * k + p]) * b[p * n + j];
            r_nt += static_cast<double>(a[i * k + p]) * bt[j * k + p];
            r_tn += static_cast<double>(at[p * m + i]) * b[p * n + j];
          }
          EXPECT_NEAR(nn[i * n + j], r_nn, 1e-4);
          EXPECT_NEAR(nt[i * n + j], r_nt, 1e-4);
          EXPECT_NEAR(tn[i * n + j], r_tn, 1e-4);
        }
      }
    }
  }
}

TEST(SimdKernelsTest, DoubleEntryPointsAreExactReferences) {
  const std::vector<double> a{1.0, 2.0, 3.0};
  const std::vector<double> b{4.0, -5.0, 6.0};
  EXPECT_EQ(Dot(a.data(), b.data(), 3), 12.0);
  std::vector<double> y{1.0, 1.0, 1.0};
  Axpy(2.0, a.data(), y.data(), 3);
  EXPECT_EQ(y, (std::vector<double>{3.0, 5.0, 7.0}));
}

}  // namespace
}  // namespace dasr::simd
