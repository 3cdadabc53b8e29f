// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pkgcap/action_classifier.hpp"
#include "pkgcap/editor.hpp"
#include "pkgcap/ngram.hpp"
#include "pkgcap/similarity.hpp"
#include "pkgcap/text.hpp"

namespace pkgcap {

struct GeneratorConfig {
  int iterations = 10;  // T
  double penalty = 1.2;
  // 0 = argmax everywhere; > 0 samples positions/tokens from the
  // temperature-flattened distributions.
  double temperature = 0.0;
  std::uint64_t seed = 0;
  std::int64_t len_s = 12;
};

// T-iteration constrained editing. Each iteration scores the current
// sentence with the action classifier, picks the best legal
// (action, position), picks the token for Replace/Insert from the combined
// LM distribution, applies the edit, and snapshots the sentence. Keyword
// positions stay protected throughout.
std::vector<Sentence> generate_candidates(const KeywordSequence& keywords,
                                          const NGramLM& flm, const NGramLM& blm,
                                          const ActionClassifier& clf,
                                          const GeneratorConfig& cfg);

struct ScoredSentence {
  Sentence sentence;
  double score = 0.0;
  bool degenerate = false;
};

struct PseudoLabelSet {
  std::string video_id;
  std::vector<ScoredSentence> selected;
  std::vector<ScoredSentence> all_candidates;
};

// Ranks candidates by video-text similarity (descending); ties break by
// shorter content, then lexicographic token ids. Keeps the top n_pse.
PseudoLabelSet select_pseudo_labels(const std::string& video_id,
                                    std::span<const Sentence> candidates,
                                    const ConceptScorer& scorer, const Vocabulary& vocab,
                                    int n_pse);

}  // namespace pkgcap
