// SPDX-License-Identifier: Apache-2.0
#include "pkgcap/editor.hpp"

#include <algorithm>
#include <stdexcept>

namespace pkgcap {

EditState EditState::from_keywords(const KeywordSequence& keywords, std::int64_t len_s) {
  EditState s;
  s.ids.push_back(Vocabulary::kBos);
  for (std::int32_t id : keywords.keywords()) s.ids.push_back(id);
  s.ids.push_back(Vocabulary::kEos);
  s.protected_pos.assign(s.ids.size(), 1);
  s.max_len = len_s;
  s.min_len = static_cast<std::int64_t>(s.ids.size());
  return s;
}

std::vector<std::int32_t> EditState::protected_tokens() const {
  std::vector<std::int32_t> out;
  for (std::size_t i = 1; i + 1 < ids.size(); ++i)
    if (protected_pos[i]) out.push_back(ids[i]);
  return out;
}

Sentence EditState::to_sentence() const {
  Sentence s;
  s.ids = ids;
  while (static_cast<std::int64_t>(s.ids.size()) < max_len)
    s.ids.push_back(Vocabulary::kPad);
  return s;
}

EditResult apply_edit(EditState& state, EditAction action, std::int64_t position,
                      std::int32_t token) {
  const std::int64_t len = state.length();
  switch (action) {
    case EditAction::kCopy:
      state.history.push_back({action, static_cast<int>(position), -1});
      return EditResult::kApplied;
    case EditAction::kReplace: {
      if (position < 1 || position >= len - 1) return EditResult::kRejectedBounds;
      if (state.is_protected(position)) return EditResult::kRejectedProtected;
      if (token < 0) return EditResult::kRejectedBounds;
      state.ids[static_cast<std::size_t>(position)] = token;
      state.history.push_back({action, static_cast<int>(position), token});
      return EditResult::kApplied;
    }
    case EditAction::kInsert: {
      if (position < 1 || position > len - 1) return EditResult::kRejectedBounds;
      if (token < 0) return EditResult::kRejectedBounds;
      if (len + 1 > state.max_len) return EditResult::kRejectedOverflow;
      state.ids.insert(state.ids.begin() + position, token);
      state.protected_pos.insert(state.protected_pos.begin() + position, 0);
      state.history.push_back({action, static_cast<int>(position), token});
      return EditResult::kApplied;
    }
    case EditAction::kDelete: {
      if (position < 1 || position >= len - 1) return EditResult::kRejectedBounds;
      if (state.is_protected(position)) return EditResult::kRejectedProtected;
      if (len - 1 < state.min_len) return EditResult::kRejectedUnderflow;
      state.ids.erase(state.ids.begin() + position);
      state.protected_pos.erase(state.protected_pos.begin() + position);
      state.history.push_back({action, static_cast<int>(position), -1});
      return EditResult::kApplied;
    }
  }
  return EditResult::kRejectedBounds;
}

namespace {

// Shared core of the replace/insert distributions. prefix_len tokens
// before the slot, suffix starting at suffix_begin after it.
std::vector<double> edit_token_distribution(const NGramLM& flm, const NGramLM& blm,
                                            const EditState& state,
                                            std::int64_t prefix_len,
                                            std::int64_t suffix_begin, double penalty) {
  if (penalty < 1.0)
    throw std::invalid_argument("edit distribution: penalty must be >= 1");
  const std::int32_t v = flm.vocab_size();
  std::span<const std::int32_t> ids(state.ids);

  std::vector<std::int32_t> prefix(ids.begin(), ids.begin() + prefix_len);
  std::vector<std::int32_t> rev_suffix(ids.rbegin(),
                                       ids.rbegin() + (state.length() - suffix_begin));

  std::vector<double> pf = flm.next_token_distribution(prefix);
  std::vector<double> pb = blm.next_token_distribution(rev_suffix);

  std::vector<bool> present(static_cast<std::size_t>(v), false);
  for (std::int32_t id : state.ids) present[static_cast<std::size_t>(id)] = true;

  double zf = 0.0, zb = 0.0;
  for (std::int32_t j = 0; j < v; ++j) {
    double pen = present[static_cast<std::size_t>(j)] ? penalty : 1.0;
    pf[static_cast<std::size_t>(j)] /= pen;
    pb[static_cast<std::size_t>(j)] /= pen;
    zf += pf[static_cast<std::size_t>(j)];
    zb += pb[static_cast<std::size_t>(j)];
  }
  std::vector<double> out(static_cast<std::size_t>(v));
  double z = 0.0;
  for (std::int32_t j = 0; j < v; ++j) {
    double r = (pf[static_cast<std::size_t>(j)] / zf) * (pb[static_cast<std::size_t>(j)] / zb);
    out[static_cast<std::size_t>(j)] = r;
    z += r;
  }
  for (auto& x : out) x /= z;
  return out;
}

}  // namespace

std::vector<double> replacement_distribution(const NGramLM& flm, const NGramLM& blm,
                                             const EditState& state, std::int64_t t,
                                             double penalty) {
  if (t < 1 || t >= state.length() - 1)
    throw std::invalid_argument("replacement_distribution: position out of range");
  if (state.is_protected(t))
    throw std::invalid_argument("replacement_distribution: protected position");
  return edit_token_distribution(flm, blm, state, t, t + 1, penalty);
}

std::vector<double> insertion_distribution(const NGramLM& flm, const NGramLM& blm,
                                           const EditState& state, std::int64_t gap,
                                           double penalty) {
  if (gap < 1 || gap > state.length() - 1)
    throw std::invalid_argument("insertion_distribution: gap out of range");
  return edit_token_distribution(flm, blm, state, gap, gap, penalty);
}

}  // namespace pkgcap
