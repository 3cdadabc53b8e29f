// SPDX-License-Identifier: Apache-2.0
#include "pkgcap/similarity.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "pkgcap/kernels.hpp"

namespace pkgcap {

ConceptScorer::ConceptScorer(std::vector<std::string> concept_inventory,
                             KeywordLexicon lexicon)
    : inventory_(std::move(concept_inventory)), lexicon_(std::move(lexicon)) {
  for (std::size_t i = 0; i < inventory_.size(); ++i)
    concept_index_.emplace(inventory_[i], static_cast<int>(i));
}

void ConceptScorer::set_video_concepts(const std::string& video_id,
                                       std::vector<std::string> concepts) {
  std::set<std::string> s(concepts.begin(), concepts.end());
  video_concepts_[video_id] = std::move(s);
}

std::vector<double> ConceptScorer::text_embedding(
    std::span<const std::string> tokens) const {
  std::vector<double> v(inventory_.size(), 0.0);
  for (const auto& tok : tokens) {
    if (!lexicon_.is_keyword(tok)) continue;
    auto it = concept_index_.find(tok);
    if (it != concept_index_.end()) v[static_cast<std::size_t>(it->second)] = 1.0;
  }
  return v;
}

std::vector<double> ConceptScorer::video_embedding(const std::string& video_id) const {
  auto it = video_concepts_.find(video_id);
  if (it == video_concepts_.end())
    throw std::invalid_argument("scorer: unknown video id: " + video_id);
  std::vector<double> v(inventory_.size(), 0.0);
  for (const auto& c : it->second) {
    auto ci = concept_index_.find(c);
    if (ci != concept_index_.end()) v[static_cast<std::size_t>(ci->second)] = 1.0;
  }
  return v;
}

double ConceptScorer::similarity(const std::string& video_id,
                                 std::span<const std::string> tokens,
                                 bool* degenerate) const {
  std::vector<double> fv = video_embedding(video_id);
  std::vector<double> ft = text_embedding(tokens);
  return cosine(fv, ft, degenerate);
}

double ConceptScorer::cosine(std::span<const double> a, std::span<const double> b,
                             bool* degenerate) {
  if (a.size() != b.size()) throw std::invalid_argument("cosine: length mismatch");
  double na = std::sqrt(kernels::dot(a.data(), a.data(), a.size()));
  double nb = std::sqrt(kernels::dot(b.data(), b.data(), b.size()));
  if (na < 1e-12 || nb < 1e-12) {
    if (degenerate) *degenerate = true;
    return 0.0;
  }
  if (degenerate) *degenerate = false;
  return kernels::dot(a.data(), b.data(), a.size()) / (na * nb);
}

void ConceptScorer::save_video_concepts(const std::filesystem::path& path) const {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path.string());
  for (const auto& [id, concepts] : video_concepts_) {
    nlohmann::json j;
    j["video_id"] = id;
    j["concepts"] = std::vector<std::string>(concepts.begin(), concepts.end());
    f << j.dump() << "\n";
  }
}

void ConceptScorer::load_video_concepts(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open for reading: " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("video_id") || !j.contains("concepts"))
      throw std::runtime_error("concepts parse error at line " + std::to_string(lineno));
    set_video_concepts(j["video_id"].get<std::string>(),
                       j["concepts"].get<std::vector<std::string>>());
  }
}

}  // namespace pkgcap
