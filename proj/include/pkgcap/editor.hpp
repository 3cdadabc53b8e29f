// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pkgcap/edits.hpp"
#include "pkgcap/ngram.hpp"
#include "pkgcap/text.hpp"

namespace pkgcap {

// A sentence under iterative editing. ids run BOS...EOS with no padding;
// protected positions (the original keywords plus the frame) can never be
// replaced or deleted, which enforces the lexical constraint structurally.
struct EditState {
  struct Record {
    EditAction action;
    int position;
    std::int32_t token;  // -1 for Copy/Delete
  };

  std::vector<std::int32_t> ids;
  std::vector<std::uint8_t> protected_pos;
  std::vector<Record> history;
  std::int64_t max_len = 0;  // len_s
  std::int64_t min_len = 0;  // keyword count + frame

  static EditState from_keywords(const KeywordSequence& keywords, std::int64_t len_s);

  std::int64_t length() const { return static_cast<std::int64_t>(ids.size()); }
  std::int64_t content_len() const { return length() - 2; }
  bool is_protected(std::int64_t pos) const {
    return protected_pos[static_cast<std::size_t>(pos)] != 0;
  }
  // Ids of the protected content tokens, in order.
  std::vector<std::int32_t> protected_tokens() const;
  Sentence to_sentence() const;
};

enum class EditResult {
  kApplied,
  kRejectedProtected,
  kRejectedOverflow,   // insert would exceed max_len
  kRejectedUnderflow,  // delete would shrink below min_len
  kRejectedBounds,
};

// Copy: no-op. Replace(pos, token): substitutes an unprotected position.
// Insert(pos, token): inserts before pos (1 <= pos <= length-1). Delete(pos):
// removes an unprotected position. The state is untouched on rejection.
EditResult apply_edit(EditState& state, EditAction action, std::int64_t position,
                      std::int32_t token = -1);

// Token distribution for replacing position t: the forward LM scores the
// token from the prefix, the backward LM from the reversed suffix, each
// divided by the repetition penalty for tokens already present, each
// renormalized, then multiplied and normalized. Throws on protected t.
std::vector<double> replacement_distribution(const NGramLM& flm, const NGramLM& blm,
                                             const EditState& state, std::int64_t t,
                                             double penalty);

// Same combination for a token inserted before position `gap`.
std::vector<double> insertion_distribution(const NGramLM& flm, const NGramLM& blm,
                                           const EditState& state, std::int64_t gap,
                                           double penalty);

}  // namespace pkgcap
