// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "pkgcap/text.hpp"

namespace pkgcap {

// Video-text relevance as the cosine of binary concept-indicator vectors:
// the video side marks the concepts that generated it, the text side marks
// the lexicon-tagged keywords that are inventory concepts. Zero-norm
// embeddings score 0 and set the degenerate flag.
class ConceptScorer {
 public:
  ConceptScorer(std::vector<std::string> concept_inventory, KeywordLexicon lexicon);

  void set_video_concepts(const std::string& video_id, std::vector<std::string> concepts);

  std::vector<double> text_embedding(std::span<const std::string> tokens) const;
  std::vector<double> video_embedding(const std::string& video_id) const;

  double similarity(const std::string& video_id, std::span<const std::string> tokens,
                    bool* degenerate = nullptr) const;

  static double cosine(std::span<const double> a, std::span<const double> b,
                       bool* degenerate = nullptr);

  const std::vector<std::string>& inventory() const { return inventory_; }

  // concepts file: one {"video_id":..., "concepts":[...]} object per line.
  void save_video_concepts(const std::filesystem::path& path) const;
  void load_video_concepts(const std::filesystem::path& path);

 private:
  std::vector<std::string> inventory_;
  std::map<std::string, int> concept_index_;
  KeywordLexicon lexicon_;
  std::map<std::string, std::set<std::string>> video_concepts_;
};

}  // namespace pkgcap
