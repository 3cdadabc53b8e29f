// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace pkgcap {

// Token edit actions with fixed codes.
enum class EditAction : int { kCopy = 0, kReplace = 1, kInsert = 2, kDelete = 3 };

inline constexpr int kNumEditActions = 4;

}  // namespace pkgcap
