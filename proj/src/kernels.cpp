// SPDX-License-Identifier: Apache-2.0
#include "pkgcap/kernels.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <stdexcept>
#include <string>

#include "pkgcap/cpu_features.hpp"

namespace pkgcap::kernels {

#if defined(PKGCAP_HAVE_AVX2)
extern const KernelTable kAvx2Table;
#endif
#if defined(PKGCAP_HAVE_NEON)
extern const KernelTable kNeonTable;
#endif

namespace {

struct Dispatch {
  Backend backend = Backend::kScalar;
  const KernelTable* table = &kScalarTable;
};

const KernelTable* table_for(Backend b) {
  switch (b) {
    case Backend::kScalar:
      return &kScalarTable;
    case Backend::kAvx2:
#if defined(PKGCAP_HAVE_AVX2)
      return cpu::has_avx2() ? &kAvx2Table : nullptr;
#else
      return nullptr;
#endif
    case Backend::kNeon:
#if defined(PKGCAP_HAVE_NEON)
      return cpu::has_neon() ? &kNeonTable : nullptr;
#else
      return nullptr;
#endif
  }
  return nullptr;
}

Backend auto_backend() {
#if defined(PKGCAP_HAVE_AVX2)
  if (cpu::has_avx2()) return Backend::kAvx2;
#endif
#if defined(PKGCAP_HAVE_NEON)
  if (cpu::has_neon()) return Backend::kNeon;
#endif
  return Backend::kScalar;
}

Dispatch make_dispatch() {
  Backend b = auto_backend();
  if (const char* env = std::getenv("PKGCAP_BACKEND")) {
    Backend wanted = b;
    bool known = true;
    if (std::strcmp(env, "scalar") == 0)
      wanted = Backend::kScalar;
    else if (std::strcmp(env, "avx2") == 0)
      wanted = Backend::kAvx2;
    else if (std::strcmp(env, "neon") == 0)
      wanted = Backend::kNeon;
    else
      known = false;
    if (known && table_for(wanted) != nullptr) {
      b = wanted;
    } else {
      std::fprintf(stderr, "pkgcap: PKGCAP_BACKEND=%s unavailable, using %s\n",
                   env, backend_name(b));
    }
  }
  return Dispatch{b, table_for(b)};
}

Dispatch& dispatch() {
  static Dispatch d = make_dispatch();
  return d;
}

}  // namespace

Backend active() { return dispatch().backend; }

const char* backend_name(Backend b) {
  switch (b) {
    case Backend::kScalar:
      return "scalar";
    case Backend::kAvx2:
      return "avx2";
    case Backend::kNeon:
      return "neon";
  }
  return "?";
}

bool supported(Backend b) { return table_for(b) != nullptr; }

void set_backend(Backend b) {
  const KernelTable* t = table_for(b);
  if (t == nullptr)
    throw std::runtime_error(std::string("kernel backend not supported on this host: ") +
                             backend_name(b));
  dispatch().backend = b;
  dispatch().table = t;
}

double dot(const double* a, const double* b, std::size_t n) {
  return dispatch().table->dot(a, b, n);
}
void axpy(double alpha, const double* x, double* y, std::size_t n) {
  dispatch().table->axpy(alpha, x, y, n);
}
void vadd(const double* a, const double* b, double* out, std::size_t n) {
  dispatch().table->vadd(a, b, out, n);
}
void vsub(const double* a, const double* b, double* out, std::size_t n) {
  dispatch().table->vsub(a, b, out, n);
}
void vmul(const double* a, const double* b, double* out, std::size_t n) {
  dispatch().table->vmul(a, b, out, n);
}
void vscale(const double* a, double alpha, double* out, std::size_t n) {
  dispatch().table->vscale(a, alpha, out, n);
}
double vsum(const double* a, std::size_t n) { return dispatch().table->vsum(a, n); }
double vmax(const double* a, std::size_t n) { return dispatch().table->vmax(a, n); }
void vrelu(const double* a, double* out, std::size_t n) {
  dispatch().table->vrelu(a, out, n);
}

void matmul_nn(const double* a, const double* b, double* c, std::size_t m,
               std::size_t k, std::size_t n) {
  std::memset(c, 0, m * n * sizeof(double));
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    const double* ai = a + i * k;
    for (std::size_t p = 0; p < k; ++p) axpy(ai[p], b + p * n, ci, n);
  }
}

void matmul_nt(const double* a, const double* b, double* c, std::size_t m,
               std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) c[i * n + j] = dot(a + i * k, b + j * k, k);
}

void matmul_tn(const double* a, const double* g, double* c, std::size_t m,
               std::size_t k, std::size_t n) {
  std::memset(c, 0, k * n * sizeof(double));
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    const double* gi = g + i * n;
    for (std::size_t p = 0; p < k; ++p) axpy(ai[p], gi, c + p * n, n);
  }
}

}  // namespace pkgcap::kernels
