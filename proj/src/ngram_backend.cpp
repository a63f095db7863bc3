#include <algorithm>
#include <cmath>
#include <set>

#include "delta/backend.hpp"

namespace delta {

NGramBackend::NGramBackend(Vocabulary vocab, int order, double smoothing_k,
                           std::map<Context, Counts> counts)
    : vocab_(std::move(vocab)), order_(order), k_(smoothing_k), counts_(std::move(counts)) {
  if (order_ < 1) throw Error(ErrorCode::invalid_input, "n-gram order must be >= 1");
  if (!(k_ > 0.0) || !std::isfinite(k_)) {
    throw Error(ErrorCode::invalid_input, "smoothing k must be > 0");
  }
  for (const auto& [ctx, next] : counts_) {
    if (ctx.size() >= static_cast<std::size_t>(order_)) {
      throw Error(ErrorCode::validation, "context longer than order - 1");
    }
    std::uint64_t total = 0;
    for (const auto& [tok, c] : next) {
      if (tok.index() >= vocab_.size()) {
        throw Error(ErrorCode::validation, "count for token outside vocabulary");
      }
      total += c;
    }
    for (TokenId t : ctx) {
      if (t.index() >= vocab_.size()) {
        throw Error(ErrorCode::validation, "context token outside vocabulary");
      }
    }
    if (total > 0) totals_[ctx] = total;
  }
}

NGramBackend::Context NGramBackend::backoff_context(std::span<const TokenId> history) const {
  const std::size_t max_len =
      std::min(history.size(), static_cast<std::size_t>(order_ - 1));
  for (std::size_t len = max_len; len > 0; --len) {
    Context suffix(history.end() - static_cast<std::ptrdiff_t>(len), history.end());
    if (totals_.contains(suffix)) return suffix;
  }
  return {};
}

ProbabilityDistribution NGramBackend::conditional(std::span<const TokenId> history) const {
  const Context ctx = backoff_context(history);
  const double v = static_cast<double>(vocab_.size());
  std::uint64_t total = 0;
  const Counts* next = nullptr;
  if (auto it = counts_.find(ctx); it != counts_.end()) next = &it->second;
  if (auto it = totals_.find(ctx); it != totals_.end()) total = it->second;

  const double denom = static_cast<double>(total) + k_ * v;
  ProbabilityDistribution probs(vocab_.size(), k_ / denom);
  if (next) {
    for (const auto& [tok, c] : *next) {
      probs[tok.index()] = (static_cast<double>(c) + k_) / denom;
    }
  }
  return probs;
}

LogitVector NGramBackend::logits(const TokenSequence& seq) const {
  LogitVector out = conditional(seq.tokens());
  for (double& p : out) p = std::log(p);
  return out;
}

NGramBackend train_ngram(const std::vector<TokenSequence>& corpus, Vocabulary vocab,
                         int order, double smoothing_k) {
  if (corpus.empty()) throw Error(ErrorCode::invalid_corpus, "empty training corpus");
  if (order < 1) throw Error(ErrorCode::invalid_input, "n-gram order must be >= 1");

  std::map<NGramBackend::Context, NGramBackend::Counts> counts;
  for (const auto& sentence : corpus) {
    std::vector<TokenId> toks = sentence.tokens();
    toks.push_back(vocab.eos());
    for (std::size_t i = 0; i < toks.size(); ++i) {
      for (std::size_t n = 0; n < static_cast<std::size_t>(order) && n <= i; ++n) {
        NGramBackend::Context ctx(toks.begin() + static_cast<std::ptrdiff_t>(i - n),
                                  toks.begin() + static_cast<std::ptrdiff_t>(i));
        ++counts[ctx][toks[i]];
      }
    }
  }
  return NGramBackend(std::move(vocab), order, smoothing_k, std::move(counts));
}

NGramBackend train_ngram_from_text(const std::vector<std::string>& sentences, int order,
                                   double smoothing_k) {
  std::vector<std::vector<std::string>> split;
  std::set<std::string> words;
  for (const auto& line : sentences) {
    auto w = split_words(line);
    if (w.empty()) continue;
    words.insert(w.begin(), w.end());
    split.push_back(std::move(w));
  }
  if (split.empty()) throw Error(ErrorCode::invalid_corpus, "corpus has no sentences");

  Vocabulary vocab = Vocabulary::with_specials({words.begin(), words.end()});
  std::vector<TokenSequence> corpus;
  corpus.reserve(split.size());
  for (const auto& w : split) {
    std::vector<TokenId> ids;
    for (const auto& s : w) ids.push_back(vocab.lookup(s));
    corpus.emplace_back(std::move(ids));
  }
  return train_ngram(corpus, std::move(vocab), order, smoothing_k);
}

}  // namespace delta
