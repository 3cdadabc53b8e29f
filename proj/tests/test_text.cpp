// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <map>

#include "pkgcap/rng.hpp"
#include "pkgcap/text.hpp"

using namespace pkgcap;

namespace {

std::vector<CorpusRecord> one_record(std::vector<std::string> sentences) {
  return {CorpusRecord{"v0", std::move(sentences), "train"}};
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("pkgcap_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

}  // namespace

TEST_CASE("tokenize lowers, strips punctuation, splits") {
  CHECK(tokenize("A Dog runs!") == std::vector<std::string>{"a", "dog", "runs"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("High-five, man.") == std::vector<std::string>{"highfive", "man"});
  CHECK(tokenize("  spaced\tout\nwords ") ==
        std::vector<std::string>{"spaced", "out", "words"});
}

TEST_CASE("vocabulary frequency rule and determinism") {
  Vocabulary v = build_vocabulary(one_record({"a a b"}), 2);
  CHECK(v.contains("a"));
  CHECK_FALSE(v.contains("b"));
  CHECK(v.id("b") == Vocabulary::kUnk);
  CHECK(v.size() == Vocabulary::kReservedCount + 1);

  Vocabulary v2 = build_vocabulary(one_record({"x y", "x y"}), 2);
  CHECK(v2.contains("x"));
  CHECK(v2.contains("y"));

  CHECK_THROWS_AS(build_vocabulary({}, 2), std::invalid_argument);
}

TEST_CASE("vocabulary equals frequency-counting oracle on a random corpus") {
  Rng rng(101);
  std::vector<std::string> words = {"cat", "dog", "man", "runs", "eats", "sees",
                                    "park", "ball", "red", "fast"};
  std::vector<CorpusRecord> corpus;
  std::map<std::string, int> oracle;
  for (int i = 0; i < 100; ++i) {
    std::string s;
    int len = 3 + static_cast<int>(rng.uniform_int(5));
    for (int j = 0; j < len; ++j) {
      const std::string& w =
          words[static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(words.size())))];
      if (j) s += ' ';
      s += w;
      ++oracle[w];
    }
    corpus.push_back({"v" + std::to_string(i), {s}, "train"});
  }
  Vocabulary v = build_vocabulary(corpus, 2);
  for (const auto& [w, n] : oracle) CHECK(v.contains(w) == (n >= 2));

  // Same corpus twice -> byte-identical serialized vocabulary.
  TempDir dir;
  v.save(dir.path / "a.vocab");
  build_vocabulary(corpus, 2).save(dir.path / "b.vocab");
  std::ifstream fa(dir.path / "a.vocab"), fb(dir.path / "b.vocab");
  std::string ca((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
  std::string cb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
  CHECK(ca == cb);
  CHECK_FALSE(ca.empty());

  Vocabulary loaded = Vocabulary::load(dir.path / "a.vocab");
  CHECK(loaded.size() == v.size());
  for (std::int32_t i = 0; i < v.size(); ++i) CHECK(loaded.token(i) == v.token(i));
}

TEST_CASE("encode frames, pads, and round-trips") {
  Vocabulary v = build_vocabulary(one_record({"a man runs", "a man runs"}), 2);
  std::vector<std::string> toks = {"a", "man", "runs"};
  Sentence s = encode(toks, v, 20);
  CHECK(s.length() == 20);
  CHECK(s.ids[0] == Vocabulary::kBos);
  CHECK(s.ids[4] == Vocabulary::kEos);
  for (std::size_t i = 5; i < 20; ++i) CHECK(s.ids[i] == Vocabulary::kPad);
  CHECK(s.content_len() == 3);
  CHECK(decode(s, v) == "a man runs");

  std::vector<std::string> oov = {"a", "zebra", "runs"};
  Sentence s2 = encode(oov, v, 20);
  CHECK(s2.ids[2] == Vocabulary::kUnk);
}

TEST_CASE("encode/decode round-trip property on random in-vocab sentences") {
  Rng rng(103);
  std::vector<std::string> words = {"cat", "dog", "man", "runs", "eats", "sees"};
  std::vector<std::string> sents;
  for (const auto& w : words) sents.push_back(w + " " + w);  // freq >= 2
  Vocabulary v = build_vocabulary(one_record(sents), 2);
  for (int rep = 0; rep < 50; ++rep) {
    int len = 1 + static_cast<int>(rng.uniform_int(8));
    std::vector<std::string> toks;
    std::string joined;
    for (int j = 0; j < len; ++j) {
      const auto& w =
          words[static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(words.size())))];
      toks.push_back(w);
      if (j) joined += ' ';
      joined += w;
    }
    Sentence s = encode(toks, v, 12);
    CHECK(decode(s, v) == joined);
    // Exactly one BOS, one EOS, nothing after EOS but PAD.
    int bos = 0, eos = 0;
    bool after_eos = false;
    for (std::int32_t id : s.ids) {
      if (id == Vocabulary::kBos) ++bos;
      if (id == Vocabulary::kEos) {
        ++eos;
        after_eos = true;
        continue;
      }
      if (after_eos) CHECK(id == Vocabulary::kPad);
    }
    CHECK(bos == 1);
    CHECK(eos == 1);
  }
}

TEST_CASE("keyword extraction follows the lexicon in order") {
  std::vector<std::string> sents = {"a man is playing guitar", "a man is playing guitar"};
  Vocabulary v = build_vocabulary(one_record(sents), 2);
  KeywordLexicon lex;
  lex.set("man", KeywordLexicon::Tag::kNoun);
  lex.set("guitar", KeywordLexicon::Tag::kNoun);
  lex.set("playing", KeywordLexicon::Tag::kVerb);

  std::vector<std::string> toks = tokenize("a man is playing guitar");
  KeywordSequence ks = extract_keywords(toks, lex, v, 4);
  CHECK(ks.ids.size() == 6);  // BOS + 4 slots + EOS
  CHECK(ks.ids.front() == Vocabulary::kBos);
  CHECK(ks.ids.back() == Vocabulary::kEos);
  auto kws = ks.keywords();
  REQUIRE(kws.size() == 3);
  CHECK(v.token(kws[0]) == "man");
  CHECK(v.token(kws[1]) == "playing");
  CHECK(v.token(kws[2]) == "guitar");
  CHECK(ks.slots()[3] == Vocabulary::kPad);

  // No lexicon hits: all-PAD slots.
  std::vector<std::string> stop = {"the", "of", "and"};
  KeywordSequence empty = extract_keywords(stop, lex, v, 4);
  CHECK(empty.keywords().empty());
  for (std::int32_t id : empty.slots()) CHECK(id == Vocabulary::kPad);

  // Truncation keeps the first n_word keywords.
  KeywordLexicon all;
  for (const auto& w : {"a", "b", "c", "d", "e", "f", "g", "h", "i", "j"})
    all.set(w, KeywordLexicon::Tag::kNoun);
  std::vector<std::string> many = {"a", "b", "c", "d", "e", "f", "g", "h", "i", "j"};
  std::vector<std::string> twice;
  for (auto& w : many) twice.push_back(w + " " + w);
  Vocabulary v2 = build_vocabulary(one_record(twice), 2);
  KeywordSequence trunc = extract_keywords(many, all, v2, 4);
  auto tk = trunc.keywords();
  REQUIRE(tk.size() == 4);
  CHECK(v2.token(tk[0]) == "a");
  CHECK(v2.token(tk[3]) == "d");
}

TEST_CASE("keywords are a subsequence of the sentence tokens") {
  Rng rng(107);
  std::vector<std::string> words = {"cat", "dog", "runs", "sees", "the", "red"};
  KeywordLexicon lex;
  lex.set("cat", KeywordLexicon::Tag::kNoun);
  lex.set("dog", KeywordLexicon::Tag::kNoun);
  lex.set("runs", KeywordLexicon::Tag::kVerb);
  lex.set("sees", KeywordLexicon::Tag::kVerb);
  std::vector<std::string> doubles;
  for (const auto& w : words) doubles.push_back(w + " " + w);
  Vocabulary v = build_vocabulary(one_record(doubles), 2);

  for (int rep = 0; rep < 50; ++rep) {
    int len = 1 + static_cast<int>(rng.uniform_int(10));
    std::vector<std::string> toks;
    for (int j = 0; j < len; ++j)
      toks.push_back(
          words[static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(words.size())))]);
    KeywordSequence ks = extract_keywords(toks, lex, v, 6);
    auto kws = ks.keywords();
    std::size_t pos = 0;
    for (std::int32_t id : kws) {
      bool found = false;
      for (; pos < toks.size(); ++pos)
        if (v.id(toks[pos]) == id) {
          found = true;
          ++pos;
          break;
        }
      CHECK(found);
    }
  }
}

TEST_CASE("corpus jsonl round-trip and lexicon file round-trip") {
  TempDir dir;
  std::vector<CorpusRecord> corpus = {
      {"vid1", {"a man runs", "a dog sits"}, "train"},
      {"vid2", {"hello world"}, "test"},
  };
  save_corpus(corpus, dir.path / "corpus.jsonl");
  auto loaded = load_corpus(dir.path / "corpus.jsonl");
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].video_id == "vid1");
  CHECK(loaded[0].sentences.size() == 2);
  CHECK(loaded[1].split == "test");

  KeywordLexicon lex;
  lex.set("man", KeywordLexicon::Tag::kNoun);
  lex.set("runs", KeywordLexicon::Tag::kVerb);
  lex.set("the", KeywordLexicon::Tag::kOther);
  lex.save(dir.path / "lex.tsv");
  KeywordLexicon l2 = KeywordLexicon::load(dir.path / "lex.tsv");
  CHECK(l2.tag("man") == KeywordLexicon::Tag::kNoun);
  CHECK(l2.tag("runs") == KeywordLexicon::Tag::kVerb);
  CHECK(l2.tag("the") == KeywordLexicon::Tag::kOther);
  CHECK(l2.tag("unknown") == KeywordLexicon::Tag::kOther);
}

TEST_CASE("few_shot_view restricts train sentences only") {
  std::vector<CorpusRecord> corpus = {
      {"t1", {"one", "two", "three"}, "train"},
      {"v1", {"one", "two", "three"}, "val"},
      {"e1", {"one", "two"}, "test"},
  };
  auto view = few_shot_view(corpus, 1);
  REQUIRE(view.size() == 3);
  CHECK(view[0].sentences == std::vector<std::string>{"one"});
  CHECK(view[1].sentences.size() == 3);
  CHECK(view[2].sentences.size() == 2);
  CHECK_THROWS_AS(few_shot_view(corpus, 0), std::invalid_argument);
}
