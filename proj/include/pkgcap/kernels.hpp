// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>

// Float64 array kernels behind a runtime-dispatched backend. The scalar
// backend is the reference; SIMD backends must agree with it within
// rounding (see tests/test_kernels.cpp). Backend selection happens once,
// on first use: PKGCAP_BACKEND=scalar|avx2|neon overrides auto-detection.

namespace pkgcap::kernels {

enum class Backend { kScalar, kAvx2, kNeon };

Backend active();
const char* backend_name(Backend b);
bool supported(Backend b);
// Throws std::runtime_error if the backend is not supported on this host.
void set_backend(Backend b);

double dot(const double* a, const double* b, std::size_t n);
// y += alpha * x
void axpy(double alpha, const double* x, double* y, std::size_t n);
void vadd(const double* a, const double* b, double* out, std::size_t n);
void vsub(const double* a, const double* b, double* out, std::size_t n);
void vmul(const double* a, const double* b, double* out, std::size_t n);
void vscale(const double* a, double alpha, double* out, std::size_t n);
double vsum(const double* a, std::size_t n);
double vmax(const double* a, std::size_t n);  // n >= 1
void vrelu(const double* a, double* out, std::size_t n);

// Row-major matrix products built on the primitives above.
// c[m x n] = a[m x k] * b[k x n]
void matmul_nn(const double* a, const double* b, double* c, std::size_t m,
               std::size_t k, std::size_t n);
// c[m x n] = a[m x k] * b[n x k]^T
void matmul_nt(const double* a, const double* b, double* c, std::size_t m,
               std::size_t k, std::size_t n);
// c[k x n] = a[m x k]^T * g[m x n]
void matmul_tn(const double* a, const double* g, double* c, std::size_t m,
               std::size_t k, std::size_t n);

struct KernelTable {
  double (*dot)(const double*, const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  void (*vadd)(const double*, const double*, double*, std::size_t);
  void (*vsub)(const double*, const double*, double*, std::size_t);
  void (*vmul)(const double*, const double*, double*, std::size_t);
  void (*vscale)(const double*, double, double*, std::size_t);
  double (*vsum)(const double*, std::size_t);
  double (*vmax)(const double*, std::size_t);
  void (*vrelu)(const double*, double*, std::size_t);
};

extern const KernelTable kScalarTable;

}  // namespace pkgcap::kernels
