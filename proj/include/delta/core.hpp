#pragma once

// Domain types and numeric primitives shared by the decoder, backends and
// the evaluation harness. All logit arithmetic is double precision.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace delta {

enum class ErrorCode {
  invalid_logits,
  invalid_input,
  invalid_plan,
  invalid_corpus,
  invalid_config,
  parse,
  validation,
  template_error,
  mismatch,
  undefined_percentage,
  backend,
  io,
  internal_invariant,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

struct TokenId {
  std::uint32_t value = 0;

  constexpr TokenId() = default;
  constexpr explicit TokenId(std::uint32_t v) : value(v) {}
  constexpr std::size_t index() const { return value; }

  friend constexpr auto operator<=>(TokenId, TokenId) = default;
};

using LogitVector = std::vector<double>;
using ProbabilityDistribution = std::vector<double>;

/// Context z = prompt x followed by generated tokens y. The first
/// prompt_len() tokens are the prompt.
class TokenSequence {
public:
  TokenSequence() = default;
  explicit TokenSequence(std::vector<TokenId> prompt);
  TokenSequence(std::vector<TokenId> tokens, std::size_t prompt_len);

  const std::vector<TokenId>& tokens() const { return tokens_; }
  std::size_t size() const { return tokens_.size(); }
  bool empty() const { return tokens_.empty(); }
  std::size_t prompt_len() const { return prompt_len_; }
  TokenId operator[](std::size_t i) const { return tokens_[i]; }

  std::span<const TokenId> prompt() const {
    return std::span(tokens_).first(prompt_len_);
  }
  std::span<const TokenId> generated() const {
    return std::span(tokens_).subspan(prompt_len_);
  }

  void push_back(TokenId t) { tokens_.push_back(t); }
  void set(std::size_t i, TokenId t);

  friend bool operator==(const TokenSequence&, const TokenSequence&) = default;

private:
  std::vector<TokenId> tokens_;
  std::size_t prompt_len_ = 0;
};

enum class DecodeMode { greedy, sample };

const char* to_string(DecodeMode mode);

/// Hyperparameters of masked-prompt contrastive decoding. Defaults are the
/// reference configuration: r_mask 0.7, alpha 0.3, beta 0.1, temperature 1.
/// mask_token and stop_tokens fall back to the backend's end-of-sequence
/// token when unset (see resolve_config in decoder.hpp).
struct DecodeConfig {
  double alpha = 0.3;
  double r_mask = 0.7;
  double beta = 0.1;
  double temperature = 1.0;
  std::optional<TokenId> mask_token;
  std::uint64_t seed = 0;
  std::size_t max_new_tokens = 16;
  std::optional<std::vector<TokenId>> stop_tokens;
  bool remask_each_step = false;
  bool mask_generated = false;
  DecodeMode mode = DecodeMode::greedy;

  friend bool operator==(const DecodeConfig&, const DecodeConfig&) = default;
};

/// Throws Error{invalid_config} naming the first out-of-range field.
/// Token fields are range-checked only when vocab_size is non-zero.
void validate(const DecodeConfig& config, std::size_t vocab_size = 0);

void check_finite(std::span<const double> logits);

/// exp(l_i / T) / sum_j exp(l_j / T), max-subtracted.
ProbabilityDistribution softmax(std::span<const double> logits,
                                double temperature = 1.0);

/// Softmax restricted to `support`; every other entry is exactly zero.
/// Equivalent to setting the excluded logits to -inf first.
ProbabilityDistribution softmax_over(std::span<const double> logits,
                                     std::span<const TokenId> support,
                                     double temperature = 1.0);

/// Index of the maximum entry, lowest index on ties.
TokenId argmax_token(std::span<const double> logits);

}  // namespace delta
