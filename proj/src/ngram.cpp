// SPDX-License-Identifier: Apache-2.0
#include "pkgcap/ngram.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pkgcap {

NGramLM::NGramLM(int order, double k, Direction direction, std::int32_t vocab_size)
    : order_(order), k_(k), direction_(direction), vocab_(vocab_size) {
  if (order < 2) throw std::invalid_argument("ngram: order must be >= 2");
  if (k <= 0.0) throw std::invalid_argument("ngram: smoothing k must be > 0");
  if (vocab_size <= 0) throw std::invalid_argument("ngram: vocab size must be positive");
  tables_.resize(static_cast<std::size_t>(order));
}

NGramLM NGramLM::train(std::span<const std::vector<std::int32_t>> sequences, int order,
                       double k, Direction direction, std::int32_t vocab_size) {
  if (sequences.empty()) throw std::invalid_argument("ngram: empty corpus");
  NGramLM lm(order, k, direction, vocab_size);
  for (const auto& seq : sequences) {
    if (direction == Direction::kForward) {
      lm.count(seq);
    } else {
      std::vector<std::int32_t> rev(seq.rbegin(), seq.rend());
      lm.count(rev);
    }
  }
  return lm;
}

void NGramLM::count(std::span<const std::int32_t> seq) {
  const std::int64_t n = static_cast<std::int64_t>(seq.size());
  for (std::int64_t i = 1; i < n; ++i) {
    for (int c = 0; c < order_ && c <= i; ++c) {
      Context ctx(seq.begin() + (i - c), seq.begin() + i);
      ContextCounts& cc = tables_[static_cast<std::size_t>(c)][ctx];
      ++cc.tokens[seq[static_cast<std::size_t>(i)]];
      ++cc.total;
    }
  }
}

const NGramLM::ContextCounts* NGramLM::find(std::span<const std::int32_t> context,
                                            int* used_len) const {
  int c = std::min<int>(static_cast<int>(context.size()), order_ - 1);
  *used_len = c;
  Context key(context.end() - c, context.end());
  const auto& table = tables_[static_cast<std::size_t>(c)];
  auto it = table.find(key);
  return it == table.end() ? nullptr : &it->second;
}

std::vector<double> NGramLM::next_token_distribution(
    std::span<const std::int32_t> context) const {
  std::vector<double> p(static_cast<std::size_t>(vocab_), 0.0);
  int used = 0;
  const ContextCounts* cc = find(context, &used);
  const double total = cc ? static_cast<double>(cc->total) : 0.0;
  const double denom = total + k_ * static_cast<double>(vocab_);
  for (auto& x : p) x = k_ / denom;
  if (cc)
    for (const auto& [tok, n] : cc->tokens)
      p[static_cast<std::size_t>(tok)] = (static_cast<double>(n) + k_) / denom;
  return p;
}

double NGramLM::token_probability(std::int32_t token,
                                  std::span<const std::int32_t> context) const {
  int used = 0;
  const ContextCounts* cc = find(context, &used);
  const double total = cc ? static_cast<double>(cc->total) : 0.0;
  std::int64_t n = 0;
  if (cc) {
    auto it = cc->tokens.find(token);
    if (it != cc->tokens.end()) n = it->second;
  }
  return (static_cast<double>(n) + k_) / (total + k_ * static_cast<double>(vocab_));
}

void NGramLM::save(const std::filesystem::path& path, const Vocabulary& vocab) const {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path.string());
  f << "# pkgcap ngram v1\n";
  f << "# order: " << order_ << "\n";
  f << "# k: " << k_ << "\n";
  f << "# direction: " << (direction_ == Direction::kForward ? "forward" : "backward")
    << "\n";
  for (const auto& table : tables_) {
    for (const auto& [ctx, cc] : table) {
      for (const auto& [tok, n] : cc.tokens) {
        for (std::size_t i = 0; i < ctx.size(); ++i) {
          if (i) f << ' ';
          f << vocab.token(ctx[i]);
        }
        f << '\t' << vocab.token(tok) << '\t' << n << '\n';
      }
    }
  }
}

NGramLM NGramLM::load(const std::filesystem::path& path, const Vocabulary& vocab) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open for reading: " + path.string());
  std::string line;
  int order = 0;
  double k = 0.0;
  Direction dir = Direction::kForward;
  for (int i = 0; i < 4; ++i) {
    if (!std::getline(f, line) || line.empty() || line[0] != '#')
      throw std::runtime_error("ngram file missing header: " + path.string());
    std::istringstream is(line.substr(1));
    std::string key;
    is >> key;
    if (key == "order:")
      is >> order;
    else if (key == "k:")
      is >> k;
    else if (key == "direction:") {
      std::string d;
      is >> d;
      dir = d == "backward" ? Direction::kBackward : Direction::kForward;
    }
  }
  NGramLM lm(order, k, dir, vocab.size());
  std::size_t lineno = 4;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto t1 = line.find('\t');
    auto t2 = line.find('\t', t1 + 1);
    if (t1 == std::string::npos || t2 == std::string::npos)
      throw std::runtime_error("ngram parse error at line " + std::to_string(lineno));
    std::string ctx_str = line.substr(0, t1);
    std::string tok_str = line.substr(t1 + 1, t2 - t1 - 1);
    std::int64_t n = std::stoll(line.substr(t2 + 1));
    Context ctx;
    std::istringstream cs(ctx_str);
    std::string w;
    while (cs >> w) ctx.push_back(vocab.id(w));
    if (static_cast<int>(ctx.size()) >= order)
      throw std::runtime_error("ngram context longer than order at line " +
                               std::to_string(lineno));
    ContextCounts& cc = lm.tables_[ctx.size()][ctx];
    cc.tokens[vocab.id(tok_str)] += n;
    cc.total += n;
  }
  return lm;
}

}  // namespace pkgcap
