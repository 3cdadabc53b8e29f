// SPDX-License-Identifier: Apache-2.0
#include "pkgcap/cpu_features.hpp"

namespace pkgcap::cpu {

bool has_avx2() {
#if (defined(__x86_64__) || defined(__i386__)) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

bool has_neon() {
#if defined(__aarch64__)
  return true;
#else
  return false;
#endif
}

}  // namespace pkgcap::cpu
