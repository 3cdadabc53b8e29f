// SPDX-License-Identifier: Apache-2.0
#include "pkgcap/text.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace pkgcap {

namespace {

const char* kReservedNames[Vocabulary::kReservedCount] = {"<pad>", "<bos>", "<eos>",
                                                          "<unk>", "<mask>"};

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open for reading: " + path.string());
  return f;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path.string());
  return f;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::string cleaned;
  cleaned.reserve(text.size());
  for (char c : text) {
    unsigned char u = static_cast<unsigned char>(c);
    if (std::ispunct(u)) continue;
    cleaned.push_back(static_cast<char>(std::tolower(u)));
  }
  std::vector<std::string> out;
  std::istringstream is(cleaned);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

Vocabulary::Vocabulary() {
  for (const char* name : kReservedNames) add(name);
}

std::int32_t Vocabulary::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(const std::string& token) const {
  return index_.count(token) != 0;
}

const std::string& Vocabulary::token(std::int32_t id) const {
  if (id < 0 || id >= size()) throw std::out_of_range("vocabulary id out of range");
  return tokens_[static_cast<std::size_t>(id)];
}

void Vocabulary::add(const std::string& token) {
  if (index_.count(token)) return;
  index_.emplace(token, static_cast<std::int32_t>(tokens_.size()));
  tokens_.push_back(token);
}

void Vocabulary::save(const std::filesystem::path& path) const {
  auto f = open_out(path);
  f << "# pkgcap vocabulary v1\n";
  f << "# reserved: <pad> <bos> <eos> <unk> <mask>\n";
  f << "# ordering: reserved, then frequency desc, ties lexicographic\n";
  f << "# tokens: " << tokens_.size() << "\n";
  for (const auto& t : tokens_) f << t << "\n";
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  auto f = open_in(path);
  std::string line;
  for (int i = 0; i < 4; ++i) {
    if (!std::getline(f, line) || line.empty() || line[0] != '#')
      throw std::runtime_error("vocabulary file missing 4-line header: " + path.string());
  }
  Vocabulary v;
  std::size_t idx = 0;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    if (idx < static_cast<std::size_t>(kReservedCount)) {
      if (line != kReservedNames[idx])
        throw std::runtime_error("vocabulary reserved token mismatch: " + line);
    } else {
      v.add(line);
    }
    ++idx;
  }
  return v;
}

std::vector<CorpusRecord> load_corpus(const std::filesystem::path& path) {
  auto f = open_in(path);
  std::vector<CorpusRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("video_id") || !j.contains("sentences"))
      throw std::runtime_error("corpus parse error at line " + std::to_string(lineno) +
                               " of " + path.string());
    CorpusRecord r;
    r.video_id = j["video_id"].get<std::string>();
    for (const auto& s : j["sentences"]) r.sentences.push_back(s.get<std::string>());
    r.split = j.value("split", "train");
    if (r.sentences.empty())
      throw std::runtime_error("corpus record without sentences: " + r.video_id);
    out.push_back(std::move(r));
  }
  return out;
}

void save_corpus(std::span<const CorpusRecord> records, const std::filesystem::path& path) {
  auto f = open_out(path);
  for (const auto& r : records) {
    nlohmann::json j;
    j["video_id"] = r.video_id;
    j["sentences"] = r.sentences;
    j["split"] = r.split;
    f << j.dump() << "\n";
  }
}

Vocabulary build_vocabulary(std::span<const CorpusRecord> corpus, int min_freq) {
  if (corpus.empty()) throw std::invalid_argument("build_vocabulary: empty corpus");
  std::map<std::string, std::int64_t> freq;
  for (const auto& r : corpus)
    for (const auto& s : r.sentences)
      for (const auto& tok : tokenize(s)) ++freq[tok];

  std::vector<std::pair<std::string, std::int64_t>> kept;
  for (const auto& [tok, n] : freq)
    if (n >= min_freq) kept.emplace_back(tok, n);
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocabulary v;
  for (const auto& [tok, n] : kept) v.add(tok);
  return v;
}

KeywordLexicon::Tag KeywordLexicon::tag(const std::string& word) const {
  auto it = tags_.find(word);
  return it == tags_.end() ? Tag::kOther : it->second;
}

void KeywordLexicon::set(const std::string& word, Tag tag) { tags_[word] = tag; }

bool KeywordLexicon::is_keyword(const std::string& word) const {
  Tag t = tag(word);
  return t == Tag::kNoun || t == Tag::kVerb;
}

void KeywordLexicon::save(const std::filesystem::path& path) const {
  auto f = open_out(path);
  std::map<std::string, Tag> sorted(tags_.begin(), tags_.end());
  for (const auto& [word, t] : sorted) {
    const char* name = t == Tag::kNoun ? "noun" : t == Tag::kVerb ? "verb" : "other";
    f << word << "\t" << name << "\n";
  }
}

KeywordLexicon KeywordLexicon::load(const std::filesystem::path& path) {
  auto f = open_in(path);
  KeywordLexicon lex;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw std::runtime_error("lexicon parse error at line " + std::to_string(lineno));
    std::string word = line.substr(0, tab);
    std::string t = line.substr(tab + 1);
    Tag tag = Tag::kOther;
    if (t == "noun")
      tag = Tag::kNoun;
    else if (t == "verb")
      tag = Tag::kVerb;
    else if (t != "other")
      throw std::runtime_error("lexicon unknown tag '" + t + "' at line " +
                               std::to_string(lineno));
    lex.set(word, tag);
  }
  return lex;
}

std::vector<std::int32_t> Sentence::content() const {
  std::vector<std::int32_t> out;
  for (std::size_t i = 1; i < ids.size(); ++i) {
    if (ids[i] == Vocabulary::kEos) break;
    if (ids[i] == Vocabulary::kPad) break;
    out.push_back(ids[i]);
  }
  return out;
}

std::int64_t Sentence::content_len() const {
  return static_cast<std::int64_t>(content().size());
}

Sentence encode(std::span<const std::string> tokens, const Vocabulary& vocab,
                std::int64_t len_s) {
  if (len_s < 3) throw std::invalid_argument("encode: len_s must be at least 3");
  Sentence s;
  s.ids.reserve(static_cast<std::size_t>(len_s));
  s.ids.push_back(Vocabulary::kBos);
  std::int64_t capacity = len_s - 2;
  for (std::int64_t i = 0; i < capacity && i < static_cast<std::int64_t>(tokens.size()); ++i)
    s.ids.push_back(vocab.id(tokens[static_cast<std::size_t>(i)]));
  s.ids.push_back(Vocabulary::kEos);
  while (static_cast<std::int64_t>(s.ids.size()) < len_s) s.ids.push_back(Vocabulary::kPad);
  return s;
}

std::string decode(const Sentence& sentence, const Vocabulary& vocab) {
  std::string out;
  for (std::size_t i = 0; i < sentence.ids.size(); ++i) {
    std::int32_t id = sentence.ids[i];
    if (id == Vocabulary::kBos) continue;
    if (id == Vocabulary::kEos) break;
    if (id == Vocabulary::kPad) continue;
    if (!out.empty()) out.push_back(' ');
    out += vocab.token(id);
  }
  return out;
}

std::span<const std::int32_t> KeywordSequence::slots() const {
  return std::span<const std::int32_t>(ids).subspan(1, static_cast<std::size_t>(n_word));
}

std::vector<std::int32_t> KeywordSequence::keywords() const {
  std::vector<std::int32_t> out;
  for (std::int32_t id : slots())
    if (id != Vocabulary::kPad) out.push_back(id);
  return out;
}

KeywordSequence extract_keywords(std::span<const std::string> tokens,
                                 const KeywordLexicon& lexicon, const Vocabulary& vocab,
                                 int n_word) {
  KeywordSequence ks;
  ks.n_word = n_word;
  ks.ids.push_back(Vocabulary::kBos);
  int placed = 0;
  for (const auto& tok : tokens) {
    if (placed >= n_word) break;
    if (!lexicon.is_keyword(tok)) continue;
    ks.ids.push_back(vocab.id(tok));
    ++placed;
  }
  while (placed < n_word) {
    ks.ids.push_back(Vocabulary::kPad);
    ++placed;
  }
  ks.ids.push_back(Vocabulary::kEos);
  return ks;
}

std::vector<CorpusRecord> few_shot_view(std::span<const CorpusRecord> corpus,
                                        int gt_per_video) {
  if (gt_per_video < 1) throw std::invalid_argument("few_shot_view: gt_per_video >= 1");
  std::vector<CorpusRecord> out;
  out.reserve(corpus.size());
  for (const auto& r : corpus) {
    CorpusRecord c;
    c.video_id = r.video_id;
    c.split = r.split;
    if (r.split == "train") {
      std::size_t n = std::min<std::size_t>(r.sentences.size(),
                                            static_cast<std::size_t>(gt_per_video));
      c.sentences.assign(r.sentences.begin(), r.sentences.begin() + static_cast<long>(n));
    } else {
      c.sentences = r.sentences;
    }
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace pkgcap
