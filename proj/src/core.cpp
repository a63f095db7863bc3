#include "delta/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace delta {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_logits: return "invalid-logits";
    case ErrorCode::invalid_input: return "invalid-input";
    case ErrorCode::invalid_plan: return "invalid-plan";
    case ErrorCode::invalid_corpus: return "invalid-corpus";
    case ErrorCode::invalid_config: return "invalid-config";
    case ErrorCode::parse: return "parse";
    case ErrorCode::validation: return "validation";
    case ErrorCode::template_error: return "template";
    case ErrorCode::mismatch: return "mismatch";
    case ErrorCode::undefined_percentage: return "undefined-percentage";
    case ErrorCode::backend: return "backend";
    case ErrorCode::io: return "io";
    case ErrorCode::internal_invariant: return "internal-invariant";
  }
  return "unknown";
}

const char* to_string(DecodeMode mode) {
  return mode == DecodeMode::greedy ? "greedy" : "sample";
}

TokenSequence::TokenSequence(std::vector<TokenId> prompt)
    : tokens_(std::move(prompt)), prompt_len_(tokens_.size()) {}

TokenSequence::TokenSequence(std::vector<TokenId> tokens, std::size_t prompt_len)
    : tokens_(std::move(tokens)), prompt_len_(prompt_len) {
  if (prompt_len_ > tokens_.size()) {
    throw Error(ErrorCode::invalid_input,
                "prompt_len " + std::to_string(prompt_len_) +
                    " exceeds sequence length " + std::to_string(tokens_.size()));
  }
}

void TokenSequence::set(std::size_t i, TokenId t) {
  if (i >= tokens_.size()) {
    throw Error(ErrorCode::invalid_input, "token position out of range");
  }
  tokens_[i] = t;
}

namespace {

void check_unit(const char* name, double v) {
  if (!(v >= 0.0 && v <= 1.0)) {
    std::ostringstream os;
    os << name << " must be in [0, 1], got " << v;
    throw Error(ErrorCode::invalid_config, os.str());
  }
}

void check_token(const char* name, TokenId t, std::size_t vocab_size) {
  if (vocab_size != 0 && t.index() >= vocab_size) {
    std::ostringstream os;
    os << name << " " << t.value << " outside vocabulary of size " << vocab_size;
    throw Error(ErrorCode::invalid_config, os.str());
  }
}

}  // namespace

void validate(const DecodeConfig& config, std::size_t vocab_size) {
  check_unit("alpha", config.alpha);
  check_unit("r_mask", config.r_mask);
  check_unit("beta", config.beta);
  if (!(config.temperature > 0.0) || !std::isfinite(config.temperature)) {
    std::ostringstream os;
    os << "temperature must be > 0, got " << config.temperature;
    throw Error(ErrorCode::invalid_config, os.str());
  }
  if (config.max_new_tokens == 0) {
    throw Error(ErrorCode::invalid_config, "max_new_tokens must be positive");
  }
  if (config.mask_token) check_token("mask_token", *config.mask_token, vocab_size);
  if (config.stop_tokens) {
    for (TokenId t : *config.stop_tokens) check_token("stop token", t, vocab_size);
  }
}

void check_finite(std::span<const double> logits) {
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (!std::isfinite(logits[i])) {
      throw Error(ErrorCode::invalid_logits,
                  "non-finite logit at index " + std::to_string(i));
    }
  }
}

namespace {

template <typename Indices>
ProbabilityDistribution softmax_impl(std::span<const double> logits,
                                     const Indices& support, double temperature) {
  if (logits.empty()) throw Error(ErrorCode::invalid_input, "softmax of empty vector");
  if (!(temperature > 0.0)) {
    throw Error(ErrorCode::invalid_input, "temperature must be > 0");
  }

  double max_logit = -std::numeric_limits<double>::infinity();
  for (std::size_t i : support) {
    if (i >= logits.size()) throw Error(ErrorCode::invalid_input, "support index out of range");
    if (!std::isfinite(logits[i])) {
      throw Error(ErrorCode::invalid_logits,
                  "non-finite logit at index " + std::to_string(i));
    }
    max_logit = std::max(max_logit, logits[i]);
  }
  if (!std::isfinite(max_logit)) {
    throw Error(ErrorCode::internal_invariant, "softmax over an empty support");
  }

  ProbabilityDistribution probs(logits.size(), 0.0);
  double total = 0.0;
  for (std::size_t i : support) {
    probs[i] = std::exp((logits[i] - max_logit) / temperature);
    total += probs[i];
  }
  for (double& p : probs) p /= total;
  return probs;
}

}  // namespace

ProbabilityDistribution softmax(std::span<const double> logits, double temperature) {
  check_finite(logits);
  std::vector<std::size_t> all(logits.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return softmax_impl(logits, all, temperature);
}

ProbabilityDistribution softmax_over(std::span<const double> logits,
                                     std::span<const TokenId> support,
                                     double temperature) {
  std::vector<std::size_t> idx;
  idx.reserve(support.size());
  for (TokenId t : support) idx.push_back(t.index());
  return softmax_impl(logits, idx, temperature);
}

TokenId argmax_token(std::span<const double> logits) {
  if (logits.empty()) throw Error(ErrorCode::invalid_input, "argmax of empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < logits.size(); ++i) {
    if (logits[i] > logits[best]) best = i;
  }
  return TokenId(static_cast<std::uint32_t>(best));
}

}  // namespace delta
