// SPDX-License-Identifier: Apache-2.0
//
// Scalar/SIMD backend equivalence. Elementwise kernels must match the
// scalar reference bit-for-bit; reductions and dot may reassociate, so
// they get a tight relative tolerance.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "pkgcap/kernels.hpp"
#include "pkgcap/rng.hpp"

namespace k = pkgcap::kernels;
using pkgcap::Rng;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n, double lo = -3.0, double hi = 3.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

double rel_err(double a, double b) {
  double d = std::fabs(a - b);
  double s = std::max({1.0, std::fabs(a), std::fabs(b)});
  return d / s;
}

struct BackendRestore {
  k::Backend saved = k::active();
  ~BackendRestore() { k::set_backend(saved); }
};

std::vector<k::Backend> simd_backends() {
  std::vector<k::Backend> out;
  for (k::Backend b : {k::Backend::kAvx2, k::Backend::kNeon})
    if (k::supported(b)) out.push_back(b);
  return out;
}

}  // namespace

TEST_CASE("scalar backend is always supported") {
  CHECK(k::supported(k::Backend::kScalar));
  BackendRestore restore;
  k::set_backend(k::Backend::kScalar);
  CHECK(k::active() == k::Backend::kScalar);
}

TEST_CASE("simd backends match scalar elementwise kernels exactly") {
  Rng rng(7);
  BackendRestore restore;
  for (k::Backend simd : simd_backends()) {
    for (std::size_t n : {1u, 3u, 4u, 7u, 8u, 64u, 257u}) {
      auto a = random_vec(rng, n);
      auto b = random_vec(rng, n);
      std::vector<double> ref(n), got(n);

      k::set_backend(k::Backend::kScalar);
      k::vadd(a.data(), b.data(), ref.data(), n);
      k::set_backend(simd);
      k::vadd(a.data(), b.data(), got.data(), n);
      CHECK(ref == got);

      k::set_backend(k::Backend::kScalar);
      k::vsub(a.data(), b.data(), ref.data(), n);
      k::set_backend(simd);
      k::vsub(a.data(), b.data(), got.data(), n);
      CHECK(ref == got);

      k::set_backend(k::Backend::kScalar);
      k::vmul(a.data(), b.data(), ref.data(), n);
      k::set_backend(simd);
      k::vmul(a.data(), b.data(), got.data(), n);
      CHECK(ref == got);

      k::set_backend(k::Backend::kScalar);
      k::vscale(a.data(), 1.7, ref.data(), n);
      k::set_backend(simd);
      k::vscale(a.data(), 1.7, got.data(), n);
      CHECK(ref == got);

      k::set_backend(k::Backend::kScalar);
      k::vrelu(a.data(), ref.data(), n);
      k::set_backend(simd);
      k::vrelu(a.data(), got.data(), n);
      CHECK(ref == got);

      k::set_backend(k::Backend::kScalar);
      double mref = k::vmax(a.data(), n);
      k::set_backend(simd);
      CHECK(k::vmax(a.data(), n) == mref);
    }
  }
}

TEST_CASE("simd reductions match scalar within rounding") {
  Rng rng(11);
  BackendRestore restore;
  for (k::Backend simd : simd_backends()) {
    for (std::size_t n : {1u, 5u, 16u, 100u, 1023u}) {
      auto a = random_vec(rng, n);
      auto b = random_vec(rng, n);
      k::set_backend(k::Backend::kScalar);
      double dref = k::dot(a.data(), b.data(), n);
      double sref = k::vsum(a.data(), n);
      k::set_backend(simd);
      CHECK(rel_err(k::dot(a.data(), b.data(), n), dref) < 1e-13);
      CHECK(rel_err(k::vsum(a.data(), n), sref) < 1e-13);

      auto y0 = random_vec(rng, n);
      auto y1 = y0;
      k::set_backend(k::Backend::kScalar);
      k::axpy(0.37, a.data(), y0.data(), n);
      k::set_backend(simd);
      k::axpy(0.37, a.data(), y1.data(), n);
      for (std::size_t i = 0; i < n; ++i) CHECK(rel_err(y0[i], y1[i]) < 1e-15);
    }
  }
}

TEST_CASE("matmul_nn against triple-loop oracle") {
  Rng rng(3);
  const std::size_t m = 3, kk = 4, n = 2;
  auto a = random_vec(rng, m * kk);
  auto b = random_vec(rng, kk * n);
  std::vector<double> c(m * n);
  k::matmul_nn(a.data(), b.data(), c.data(), m, kk, n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < kk; ++p) s += a[i * kk + p] * b[p * n + j];
      CHECK(rel_err(c[i * n + j], s) < 1e-13);
    }
}

TEST_CASE("matmul_nt and matmul_tn against loops") {
  Rng rng(5);
  const std::size_t m = 5, kk = 3, n = 4;
  auto a = random_vec(rng, m * kk);
  auto b = random_vec(rng, n * kk);
  std::vector<double> c(m * n);
  k::matmul_nt(a.data(), b.data(), c.data(), m, kk, n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < kk; ++p) s += a[i * kk + p] * b[j * kk + p];
      CHECK(rel_err(c[i * n + j], s) < 1e-13);
    }

  auto g = random_vec(rng, m * n);
  std::vector<double> ct(kk * n);
  k::matmul_tn(a.data(), g.data(), ct.data(), m, kk, n);
  for (std::size_t p = 0; p < kk; ++p)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < m; ++i) s += a[i * kk + p] * g[i * n + j];
      CHECK(rel_err(ct[p * n + j], s) < 1e-13);
    }
}

TEST_CASE("unsupported backend raises") {
#if !defined(__aarch64__)
  CHECK_THROWS(k::set_backend(k::Backend::kNeon));
#else
  CHECK_THROWS(k::set_backend(k::Backend::kAvx2));
#endif
}
