// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pkgcap/edits.hpp"
#include "pkgcap/ngram.hpp"
#include "pkgcap/tensor.hpp"

namespace pkgcap {

// One synthetic training instance: an edited sentence plus a per-position
// action label, frame tokens included.
struct SyntheticPair {
  std::vector<std::int32_t> ids;
  std::vector<EditAction> actions;
};

// Target fractions of action labels across all emitted positions.
struct SyntheticMixture {
  double copy = 0.55;
  double replace = 0.15;
  double insert = 0.15;
  double del = 0.15;
  int pairs_per_sentence = 3;
};

// Builds labeled pairs from framed sentences. An Insert label marks a
// position whose predecessor was dropped; Delete marks a spurious token;
// Replace marks a substituted one. Fillers for Delete/Replace are the
// forward LM's highest-probability non-reserved token given the prefix,
// avoiding the token the recipe displaced. Sentences with fewer than 3
// content tokens are skipped.
std::vector<SyntheticPair> create_synthetic_pairs(
    std::span<const std::vector<std::int32_t>> framed_sentences, const NGramLM& flm,
    const SyntheticMixture& mixture, std::uint64_t seed);

struct ActionClassifierConfig {
  int window = 2;  // context tokens on each side
  int emb_dim = 16;
  int hidden = 64;
  int epochs = 10;
  int batch = 32;
  double lr = 1e-3;
  std::uint64_t seed = 1;
};

// Windowed MLP mapping each token (plus +-window context) to a 4-way
// action distribution.
class ActionClassifier {
 public:
  ActionClassifier(std::int32_t vocab_size, const ActionClassifierConfig& cfg);

  static ActionClassifier train(std::span<const SyntheticPair> pairs,
                                std::int32_t vocab_size,
                                const ActionClassifierConfig& cfg);

  // 4 x len probability matrix; every column sums to 1.
  Tensor action_probabilities(std::span<const std::int32_t> ids) const;

  // Sum of each action's row over all positions.
  static std::array<double, kNumEditActions> action_row_sums(const Tensor& probs);

  double accuracy(std::span<const SyntheticPair> pairs) const;

  std::int32_t vocab_size() const { return vocab_; }
  const ActionClassifierConfig& config() const { return cfg_; }
  std::vector<std::pair<std::string, Var>> named_parameters() const;

 private:
  Var window_features(std::span<const std::int32_t> ids) const;
  Var batch_logits(std::span<const std::vector<std::int32_t>> windows) const;

  std::int32_t vocab_;
  ActionClassifierConfig cfg_;
  Var emb_, w1_, b1_, w2_, b2_;
};

}  // namespace pkgcap
