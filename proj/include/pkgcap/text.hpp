// SPDX-License-Identifier: Apache-2.0
//
// Vocabulary, tokenization, keyword extraction, sentence framing, and
// corpus file I/O.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace pkgcap {

// Lowercase, strip punctuation characters entirely, split on whitespace.
std::vector<std::string> tokenize(std::string_view text);

class Vocabulary {
 public:
  static constexpr std::int32_t kPad = 0;
  static constexpr std::int32_t kBos = 1;
  static constexpr std::int32_t kEos = 2;
  static constexpr std::int32_t kUnk = 3;
  static constexpr std::int32_t kMask = 4;
  static constexpr std::int32_t kReservedCount = 5;

  Vocabulary();

  std::int32_t size() const { return static_cast<std::int32_t>(tokens_.size()); }
  std::int32_t id(const std::string& token) const;  // kUnk when absent
  bool contains(const std::string& token) const;
  const std::string& token(std::int32_t id) const;
  bool is_reserved(std::int32_t id) const { return id >= 0 && id < kReservedCount; }

  void add(const std::string& token);

  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::int32_t> index_;
};

struct CorpusRecord {
  std::string video_id;
  std::vector<std::string> sentences;
  std::string split;  // train | val | test
};

std::vector<CorpusRecord> load_corpus(const std::filesystem::path& path);
void save_corpus(std::span<const CorpusRecord> records, const std::filesystem::path& path);

// Reserved tokens first, then tokens with frequency >= min_freq by
// descending frequency, ties lexicographic.
Vocabulary build_vocabulary(std::span<const CorpusRecord> corpus, int min_freq = 2);

class KeywordLexicon {
 public:
  enum class Tag { kNoun, kVerb, kOther };

  Tag tag(const std::string& word) const;  // kOther when absent
  void set(const std::string& word, Tag tag);
  bool is_keyword(const std::string& word) const;

  void save(const std::filesystem::path& path) const;
  static KeywordLexicon load(const std::filesystem::path& path);

 private:
  std::unordered_map<std::string, Tag> tags_;
};

// Fixed-width token-id frame: BOS, content, EOS, then PAD out to len_s
// total positions (content capacity is len_s - 2).
struct Sentence {
  std::vector<std::int32_t> ids;

  std::int64_t length() const { return static_cast<std::int64_t>(ids.size()); }
  // Tokens strictly between BOS and EOS.
  std::vector<std::int32_t> content() const;
  std::int64_t content_len() const;
};

Sentence encode(std::span<const std::string> tokens, const Vocabulary& vocab,
                std::int64_t len_s);
std::string decode(const Sentence& sentence, const Vocabulary& vocab);

// BOS, then exactly n_word keyword slots (PAD-filled), then EOS. Keywords
// are the lexicon's nouns and verbs in sentence order, truncated to n_word.
struct KeywordSequence {
  std::vector<std::int32_t> ids;
  int n_word = 0;

  // The n_word slots between BOS and EOS, PAD included.
  std::span<const std::int32_t> slots() const;
  // Non-PAD keyword ids.
  std::vector<std::int32_t> keywords() const;
};

KeywordSequence extract_keywords(std::span<const std::string> tokens,
                                 const KeywordLexicon& lexicon, const Vocabulary& vocab,
                                 int n_word);

// First gt_per_video sentences of each train record; val/test pass through
// untouched. The few-supervision contract for pseudo-labeling and training.
std::vector<CorpusRecord> few_shot_view(std::span<const CorpusRecord> corpus,
                                        int gt_per_video);

}  // namespace pkgcap
