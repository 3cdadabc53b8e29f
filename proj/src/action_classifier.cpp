// SPDX-License-Identifier: Apache-2.0
#include "pkgcap/action_classifier.hpp"

#include <algorithm>
#include <stdexcept>

#include "pkgcap/nn.hpp"
#include "pkgcap/rng.hpp"
#include "pkgcap/text.hpp"

namespace pkgcap {

namespace {

// Highest-probability non-reserved token; `avoid` (if >= 0) is excluded.
std::int32_t argmax_filler(const NGramLM& flm, std::span<const std::int32_t> prefix,
                           std::int32_t avoid) {
  std::vector<double> p = flm.next_token_distribution(prefix);
  std::int32_t best = -1;
  double best_p = -1.0;
  for (std::int32_t j = 0; j < static_cast<std::int32_t>(p.size()); ++j) {
    if (j < Vocabulary::kReservedCount || j == avoid) continue;
    if (p[static_cast<std::size_t>(j)] > best_p) {
      best_p = p[static_cast<std::size_t>(j)];
      best = j;
    }
  }
  if (best < 0) throw std::runtime_error("synthetic pairs: vocabulary too small");
  return best;
}

}  // namespace

std::vector<SyntheticPair> create_synthetic_pairs(
    std::span<const std::vector<std::int32_t>> framed_sentences, const NGramLM& flm,
    const SyntheticMixture& mixture, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<SyntheticPair> out;
  for (const auto& framed : framed_sentences) {
    if (framed.size() < 5) continue;  // BOS + 3 content + EOS
    std::vector<std::int32_t> content(framed.begin() + 1, framed.end() - 1);
    const std::int64_t m = static_cast<std::int64_t>(content.size());
    // Frame positions are (almost) always Copy; boost the per-position
    // action rates so fractions over all positions land on the mixture.
    const double boost = (static_cast<double>(m) + 2.0) / static_cast<double>(m);
    const double f_del = mixture.del * boost;
    const double f_ins = mixture.insert * boost;
    const double f_rep = mixture.replace * boost;
    for (int rep = 0; rep < mixture.pairs_per_sentence; ++rep) {
      SyntheticPair pair;
      pair.ids.push_back(Vocabulary::kBos);
      pair.actions.push_back(EditAction::kCopy);
      bool eos_insert = false;
      std::int64_t i = 0;
      while (i < m) {
        double r = rng.uniform();
        std::int32_t cur = content[static_cast<std::size_t>(i)];
        if (r < f_del) {
          pair.ids.push_back(argmax_filler(flm, pair.ids, cur));
          pair.actions.push_back(EditAction::kDelete);
        } else if (r < f_del + f_ins) {
          // Drop the current token; its successor carries the Insert mark.
          if (i + 1 < m) {
            pair.ids.push_back(content[static_cast<std::size_t>(i + 1)]);
            pair.actions.push_back(EditAction::kInsert);
            i += 2;
          } else {
            eos_insert = true;
            i += 1;
          }
        } else if (r < f_del + f_ins + f_rep) {
          pair.ids.push_back(argmax_filler(flm, pair.ids, cur));
          pair.actions.push_back(EditAction::kReplace);
          i += 1;
        } else {
          pair.ids.push_back(cur);
          pair.actions.push_back(EditAction::kCopy);
          i += 1;
        }
      }
      pair.ids.push_back(Vocabulary::kEos);
      pair.actions.push_back(eos_insert ? EditAction::kInsert : EditAction::kCopy);
      out.push_back(std::move(pair));
    }
  }
  return out;
}

ActionClassifier::ActionClassifier(std::int32_t vocab_size,
                                   const ActionClassifierConfig& cfg)
    : vocab_(vocab_size), cfg_(cfg) {
  Rng rng(Rng::splitmix(cfg.seed ^ 0xac110c1fULL));
  const std::int64_t e = cfg.emb_dim;
  const std::int64_t win = 2 * cfg.window + 1;
  emb_ = Var::parameter(uniform_init({vocab_size, e}, e, rng));
  w1_ = Var::parameter(uniform_init({win * e, cfg.hidden}, win * e, rng));
  b1_ = Var::parameter(Tensor::zeros({cfg.hidden}));
  w2_ = Var::parameter(uniform_init({cfg.hidden, kNumEditActions}, cfg.hidden, rng));
  b2_ = Var::parameter(Tensor::zeros({kNumEditActions}));
}

Var ActionClassifier::batch_logits(
    std::span<const std::vector<std::int32_t>> windows) const {
  const int win = 2 * cfg_.window + 1;
  Var x;
  for (int o = 0; o < win; ++o) {
    std::vector<std::int32_t> col(windows.size());
    for (std::size_t i = 0; i < windows.size(); ++i)
      col[i] = windows[i][static_cast<std::size_t>(o)];
    Var ec = embedding(emb_, col);
    x = o == 0 ? ec : concat_cols(x, ec);
  }
  return add_rowvec(matmul(relu(add_rowvec(matmul(x, w1_), b1_)), w2_), b2_);
}

namespace {

std::vector<std::int32_t> window_at(std::span<const std::int32_t> ids, std::int64_t pos,
                                    int w) {
  std::vector<std::int32_t> out;
  out.reserve(static_cast<std::size_t>(2 * w + 1));
  for (std::int64_t o = pos - w; o <= pos + w; ++o)
    out.push_back(o >= 0 && o < static_cast<std::int64_t>(ids.size())
                      ? ids[static_cast<std::size_t>(o)]
                      : Vocabulary::kPad);
  return out;
}

}  // namespace

ActionClassifier ActionClassifier::train(std::span<const SyntheticPair> pairs,
                                         std::int32_t vocab_size,
                                         const ActionClassifierConfig& cfg) {
  if (pairs.size() < 100)
    throw std::invalid_argument("action classifier: at least 100 pairs required, got " +
                                std::to_string(pairs.size()));
  ActionClassifier clf(vocab_size, cfg);

  std::vector<std::vector<std::int32_t>> windows;
  std::vector<std::int32_t> labels;
  for (const auto& p : pairs)
    for (std::size_t i = 0; i < p.ids.size(); ++i) {
      windows.push_back(window_at(p.ids, static_cast<std::int64_t>(i), cfg.window));
      labels.push_back(static_cast<std::int32_t>(p.actions[i]));
    }

  Adam opt({clf.emb_, clf.w1_, clf.b1_, clf.w2_, clf.b2_}, cfg.lr);
  Rng shuffle_rng(Rng::splitmix(cfg.seed ^ 0x50f71eULL));
  std::vector<std::size_t> order(windows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch)) {
      std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch));
      std::vector<std::vector<std::int32_t>> bw;
      std::vector<std::int32_t> bl;
      for (std::size_t i = start; i < end; ++i) {
        bw.push_back(windows[order[i]]);
        bl.push_back(labels[order[i]]);
      }
      opt.zero_grad();
      Var loss = cross_entropy_logits(clf.batch_logits(bw), bl);
      backward(loss);
      opt.step();
    }
  }
  return clf;
}

Tensor ActionClassifier::action_probabilities(std::span<const std::int32_t> ids) const {
  ad::NoGradGuard guard;
  std::vector<std::vector<std::int32_t>> windows;
  for (std::size_t i = 0; i < ids.size(); ++i)
    windows.push_back(window_at(ids, static_cast<std::int64_t>(i), cfg_.window));
  Var probs = softmax_rows(batch_logits(windows));
  const std::int64_t len = static_cast<std::int64_t>(ids.size());
  Tensor out({kNumEditActions, len});
  for (std::int64_t t = 0; t < len; ++t)
    for (std::int64_t r = 0; r < kNumEditActions; ++r)
      out.at(r, t) = probs.val().at(t, r);
  return out;
}

std::array<double, kNumEditActions> ActionClassifier::action_row_sums(const Tensor& probs) {
  std::array<double, kNumEditActions> sums{};
  for (std::int64_t r = 0; r < kNumEditActions; ++r)
    for (std::int64_t t = 0; t < probs.cols(); ++t) sums[static_cast<std::size_t>(r)] += probs.at(r, t);
  return sums;
}

double ActionClassifier::accuracy(std::span<const SyntheticPair> pairs) const {
  std::int64_t correct = 0, total = 0;
  for (const auto& p : pairs) {
    Tensor probs = action_probabilities(p.ids);
    for (std::int64_t t = 0; t < probs.cols(); ++t) {
      int best = 0;
      for (int r = 1; r < kNumEditActions; ++r)
        if (probs.at(r, t) > probs.at(best, t)) best = r;
      if (best == static_cast<int>(p.actions[static_cast<std::size_t>(t)])) ++correct;
      ++total;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

std::vector<std::pair<std::string, Var>> ActionClassifier::named_parameters() const {
  return {{"clf.emb", emb_}, {"clf.w1", w1_}, {"clf.b1", b1_}, {"clf.w2", w2_}, {"clf.b2", b2_}};
}

}  // namespace pkgcap
