// SPDX-License-Identifier: Apache-2.0
#include "pkgcap/generator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pkgcap/rng.hpp"

namespace pkgcap {

namespace {

bool position_valid(const EditState& state, EditAction action, std::int64_t t) {
  const std::int64_t len = state.length();
  switch (action) {
    case EditAction::kCopy:
      return true;
    case EditAction::kReplace:
      return t >= 1 && t < len - 1 && !state.is_protected(t);
    case EditAction::kInsert:
      // "insert before t"; before EOS is allowed, before BOS is not.
      return t >= 1 && t <= len - 1 && len < state.max_len;
    case EditAction::kDelete:
      return t >= 1 && t < len - 1 && !state.is_protected(t) &&
             len - 1 >= state.min_len;
  }
  return false;
}

// Argmax with optional temperature sampling over masked weights. With
// temperature 0 no randomness is consumed.
std::int64_t pick_index(std::span<const double> weights,
                        const std::vector<bool>& valid, double temperature, Rng& rng) {
  if (temperature > 0.0) {
    double z = 0.0;
    std::vector<double> w(weights.size(), 0.0);
    for (std::size_t i = 0; i < weights.size(); ++i)
      if (valid[i]) {
        w[i] = std::pow(weights[i], 1.0 / temperature);
        z += w[i];
      }
    if (z > 0.0) {
      double r = rng.uniform() * z;
      double acc = 0.0;
      for (std::size_t i = 0; i < w.size(); ++i) {
        if (!valid[i]) continue;
        acc += w[i];
        if (r < acc) return static_cast<std::int64_t>(i);
      }
    }
  }
  std::int64_t best = -1;
  double best_w = -1.0;
  for (std::size_t i = 0; i < weights.size(); ++i)
    if (valid[i] && weights[i] > best_w) {
      best_w = weights[i];
      best = static_cast<std::int64_t>(i);
    }
  return best;
}

std::int32_t pick_token(std::span<const double> dist, double temperature, Rng& rng) {
  std::vector<bool> valid(dist.size(), true);
  for (std::int32_t j = 0; j < Vocabulary::kReservedCount; ++j)
    valid[static_cast<std::size_t>(j)] = false;
  return static_cast<std::int32_t>(pick_index(dist, valid, temperature, rng));
}

}  // namespace

std::vector<Sentence> generate_candidates(const KeywordSequence& keywords,
                                          const NGramLM& flm, const NGramLM& blm,
                                          const ActionClassifier& clf,
                                          const GeneratorConfig& cfg) {
  if (cfg.iterations < 1)
    throw std::invalid_argument("generate_candidates: iterations must be >= 1");
  Rng rng(cfg.seed);
  EditState state = EditState::from_keywords(keywords, cfg.len_s);
  std::vector<Sentence> snapshots;
  snapshots.reserve(static_cast<std::size_t>(cfg.iterations));

  for (int iter = 0; iter < cfg.iterations; ++iter) {
    Tensor probs = clf.action_probabilities(state.ids);
    const std::int64_t len = state.length();

    // Action scores: sum each row over its legal positions.
    std::array<double, kNumEditActions> row_sum{};
    std::array<bool, kNumEditActions> row_any{};
    for (int r = 0; r < kNumEditActions; ++r) {
      EditAction a = static_cast<EditAction>(r);
      for (std::int64_t t = 0; t < len; ++t)
        if (position_valid(state, a, t)) {
          row_sum[static_cast<std::size_t>(r)] += probs.at(r, t);
          row_any[static_cast<std::size_t>(r)] = true;
        }
    }

    int action = 0;  // Copy fallback
    double best = -1.0;
    for (int r = 0; r < kNumEditActions; ++r)
      if (row_any[static_cast<std::size_t>(r)] &&
          row_sum[static_cast<std::size_t>(r)] > best) {
        best = row_sum[static_cast<std::size_t>(r)];
        action = r;
      }

    EditAction act = static_cast<EditAction>(action);
    if (act != EditAction::kCopy) {
      std::vector<double> pos_w(static_cast<std::size_t>(len));
      std::vector<bool> pos_valid(static_cast<std::size_t>(len), false);
      for (std::int64_t t = 0; t < len; ++t) {
        pos_w[static_cast<std::size_t>(t)] = probs.at(action, t);
        pos_valid[static_cast<std::size_t>(t)] = position_valid(state, act, t);
      }
      std::int64_t t = pick_index(pos_w, pos_valid, cfg.temperature, rng);
      EditResult res = EditResult::kRejectedBounds;
      if (t >= 0) {
        switch (act) {
          case EditAction::kReplace: {
            auto dist = replacement_distribution(flm, blm, state, t, cfg.penalty);
            res = apply_edit(state, act, t, pick_token(dist, cfg.temperature, rng));
            break;
          }
          case EditAction::kInsert: {
            auto dist = insertion_distribution(flm, blm, state, t, cfg.penalty);
            res = apply_edit(state, act, t, pick_token(dist, cfg.temperature, rng));
            break;
          }
          case EditAction::kDelete:
            res = apply_edit(state, act, t);
            break;
          case EditAction::kCopy:
            break;
        }
      }
      if (res != EditResult::kApplied) apply_edit(state, EditAction::kCopy, 0);
    } else {
      apply_edit(state, EditAction::kCopy, 0);
    }
    snapshots.push_back(state.to_sentence());
  }
  return snapshots;
}

PseudoLabelSet select_pseudo_labels(const std::string& video_id,
                                    std::span<const Sentence> candidates,
                                    const ConceptScorer& scorer, const Vocabulary& vocab,
                                    int n_pse) {
  if (n_pse < 0 || n_pse > static_cast<int>(candidates.size()))
    throw std::invalid_argument("select_pseudo_labels: n_pse " + std::to_string(n_pse) +
                                " exceeds candidate count " +
                                std::to_string(candidates.size()));
  PseudoLabelSet out;
  out.video_id = video_id;
  for (const auto& c : candidates) {
    ScoredSentence s;
    s.sentence = c;
    std::vector<std::string> tokens = tokenize(decode(c, vocab));
    s.score = scorer.similarity(video_id, tokens, &s.degenerate);
    out.all_candidates.push_back(std::move(s));
  }
  std::sort(out.all_candidates.begin(), out.all_candidates.end(),
            [](const ScoredSentence& a, const ScoredSentence& b) {
              if (a.score != b.score) return a.score > b.score;
              if (a.sentence.content_len() != b.sentence.content_len())
                return a.sentence.content_len() < b.sentence.content_len();
              return a.sentence.ids < b.sentence.ids;
            });
  out.selected.assign(out.all_candidates.begin(), out.all_candidates.begin() + n_pse);
  return out;
}

}  // namespace pkgcap
