// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace pkgcap::cpu {

// Runtime checks. has_avx2() requires both AVX2 and FMA.
bool has_avx2();
bool has_neon();

}  // namespace pkgcap::cpu
