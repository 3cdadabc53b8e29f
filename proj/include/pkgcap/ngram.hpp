// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <vector>

#include "pkgcap/text.hpp"

namespace pkgcap {

// Add-k smoothed n-gram model over vocabulary ids. Contexts shorter than
// order-1 use the matching lower-order counts; the empty context is the
// smoothed unigram. The backward direction trains on reversed sequences
// and scores a token from the reversed suffix that follows it.
class NGramLM {
 public:
  enum class Direction { kForward, kBackward };

  NGramLM(int order, double k, Direction direction, std::int32_t vocab_size);

  // sequences are BOS...EOS framed id runs without padding.
  static NGramLM train(std::span<const std::vector<std::int32_t>> sequences, int order,
                       double k, Direction direction, std::int32_t vocab_size);

  // Length-N_voc probability vector; context is most-recent-last.
  std::vector<double> next_token_distribution(std::span<const std::int32_t> context) const;
  double token_probability(std::int32_t token, std::span<const std::int32_t> context) const;

  int order() const { return order_; }
  double k() const { return k_; }
  Direction direction() const { return direction_; }
  std::int32_t vocab_size() const { return vocab_; }

  void save(const std::filesystem::path& path, const Vocabulary& vocab) const;
  static NGramLM load(const std::filesystem::path& path, const Vocabulary& vocab);

 private:
  using Context = std::vector<std::int32_t>;
  struct ContextCounts {
    std::map<std::int32_t, std::int64_t> tokens;
    std::int64_t total = 0;
  };

  const ContextCounts* find(std::span<const std::int32_t> context, int* used_len) const;
  void count(std::span<const std::int32_t> seq);

  int order_;
  double k_;
  Direction direction_;
  std::int32_t vocab_;
  // One table per context length 0..order-1.
  std::vector<std::map<Context, ContextCounts>> tables_;
};

}  // namespace pkgcap
