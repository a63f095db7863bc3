#pragma once

// Logit sources. Anything that maps a token sequence to one logit per
// vocabulary entry can drive the decoder; two desk-scale implementations
// live here: a table-driven scripted backend and an add-k n-gram model.

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "delta/core.hpp"

namespace delta {

class Vocabulary {
public:
  static constexpr std::string_view kUnk = "<unk>";
  static constexpr std::string_view kEos = "</s>";

  /// Reserves <unk> = 0 and </s> = 1, then appends `words` (deduplicated,
  /// in the order given).
  static Vocabulary with_specials(const std::vector<std::string>& words);

  /// Explicit token list; `eos` and `unk` must name entries of it.
  Vocabulary(std::vector<std::string> tokens, TokenId eos, TokenId unk);
  Vocabulary() = default;

  std::size_t size() const { return id_to_string_.size(); }
  TokenId eos() const { return eos_; }
  TokenId unk() const { return unk_; }

  const std::string& token(TokenId id) const;
  std::optional<TokenId> find(std::string_view word) const;
  TokenId lookup(std::string_view word) const;  // unk when absent
  const std::vector<std::string>& tokens() const { return id_to_string_; }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.id_to_string_ == b.id_to_string_ && a.eos_ == b.eos_ && a.unk_ == b.unk_;
  }

private:
  std::vector<std::string> id_to_string_;
  std::unordered_map<std::string, TokenId> string_to_id_;
  TokenId eos_;
  TokenId unk_;
};

/// Lowercased whitespace split.
std::vector<std::string> split_words(std::string_view text);

TokenSequence tokenize(std::string_view text, const Vocabulary& vocab);

/// Space-joined token strings.
std::string detokenize(std::span<const TokenId> tokens, const Vocabulary& vocab);

/// Pure mapping from a token sequence to next-token logits.
class LogitSource {
public:
  virtual ~LogitSource() = default;

  virtual LogitVector logits(const TokenSequence& seq) const = 0;
  virtual const Vocabulary& vocabulary() const = 0;
  virtual std::string_view kind() const = 0;

  std::size_t vocab_size() const { return vocabulary().size(); }
};

class ScriptedBackend final : public LogitSource {
public:
  using Key = std::vector<TokenId>;

  ScriptedBackend(Vocabulary vocab, LogitVector default_logits);

  void set(Key key, LogitVector logits);

  LogitVector logits(const TokenSequence& seq) const override;
  const Vocabulary& vocabulary() const override { return vocab_; }
  std::string_view kind() const override { return "scripted"; }

  const std::map<Key, LogitVector>& table() const { return table_; }
  const LogitVector& default_logits() const { return default_; }

private:
  void check_length(const LogitVector& v) const;

  Vocabulary vocab_;
  LogitVector default_;
  std::map<Key, LogitVector> table_;
};

/// Add-k smoothed n-gram model with longest-observed-suffix backoff.
///
/// For the last (order - 1) tokens c of the sequence, the model picks the
/// longest suffix s of c that was seen as a context during training (falling
/// back to the empty context, i.e. unigrams) and returns
///   P(w | s) = (count(s, w) + k) / (count(s) + k * |V|).
/// Training appends </s> to every sentence; no start padding.
class NGramBackend final : public LogitSource {
public:
  using Context = std::vector<TokenId>;
  using Counts = std::map<TokenId, std::uint64_t>;

  static constexpr int kFormatVersion = 1;

  NGramBackend(Vocabulary vocab, int order, double smoothing_k,
               std::map<Context, Counts> counts);

  int order() const { return order_; }
  double smoothing_k() const { return k_; }
  const std::map<Context, Counts>& counts() const { return counts_; }

  /// Longest observed suffix of the last order-1 tokens.
  Context backoff_context(std::span<const TokenId> history) const;

  ProbabilityDistribution conditional(std::span<const TokenId> history) const;

  /// Natural log of `conditional` over the sequence's tokens.
  LogitVector logits(const TokenSequence& seq) const override;
  const Vocabulary& vocabulary() const override { return vocab_; }
  std::string_view kind() const override { return "ngram"; }

private:
  Vocabulary vocab_;
  int order_;
  double k_;
  std::map<Context, Counts> counts_;
  std::map<Context, std::uint64_t> totals_;
};

NGramBackend train_ngram(const std::vector<TokenSequence>& corpus, Vocabulary vocab,
                         int order, double smoothing_k);

/// Builds the vocabulary from the sentences (specials first, then words in
/// sorted order) and trains on them.
NGramBackend train_ngram_from_text(const std::vector<std::string>& sentences,
                                   int order, double smoothing_k);

}  // namespace delta
