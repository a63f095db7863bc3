#pragma once

// Masked-prompt contrastive decoding.
//
// Per step t with context z:
//   original  = logits(z)
//   masked    = logits(mask(z))
//   combined  = (1 + alpha) * original - alpha * masked
//   head      = { w : softmax(original)[w] >= beta * max softmax(original) }
//   y_t       ~ softmax(combined restricted to head, temperature)
// Greedy mode takes the argmax of the restricted combined logits instead.

#include <span>
#include <string>
#include <vector>

#include "delta/backend.hpp"
#include "delta/core.hpp"
#include "delta/masking.hpp"
#include "delta/rng.hpp"

namespace delta {

struct StepTrace {
  std::size_t step = 0;
  LogitVector original_logits;
  LogitVector masked_logits;
  LogitVector combined_logits;  // before head filtering
  std::vector<TokenId> head_set;
  ProbabilityDistribution distribution;
  TokenId chosen;
  MaskPlan mask_plan;

  friend bool operator==(const StepTrace&, const StepTrace&) = default;
};

enum class StopReason { stop_token, max_tokens };

const char* to_string(StopReason reason);

struct DecodeResult {
  TokenSequence sequence;  // prompt + generated, including a final stop token
  std::string text;        // generated tokens, stop token excluded
  std::vector<StepTrace> traces;
  StopReason stop_reason = StopReason::max_tokens;

  friend bool operator==(const DecodeResult&, const DecodeResult&) = default;
};

/// Elementwise (1 + alpha) * original - alpha * masked.
LogitVector delta_combine(std::span<const double> original, std::span<const double> masked,
                          double alpha);

/// Tokens whose probability under softmax(original, T = 1) is at least
/// beta times the maximum probability, ascending by id.
std::vector<TokenId> apc_head(std::span<const double> original, double beta);

/// Fills mask_token and stop_tokens from the vocabulary's eos when unset and
/// validates the result against the vocabulary.
DecodeConfig resolve_config(DecodeConfig config, const Vocabulary& vocab);

/// Inverse-CDF draw over token ids in ascending order.
TokenId sample_token(std::span<const double> distribution, Rng& rng);

/// Random stream used for sampling at `step` of a generation seeded `seed`.
Rng sampling_stream(std::uint64_t seed, std::size_t step);

/// Random stream used for the mask plan at `step`. Without remasking every
/// step shares the step-0 stream.
Rng mask_stream(std::uint64_t seed, std::size_t step, bool remask_each_step);

/// One decoding step. `config` must be resolved.
StepTrace decode_step(const TokenSequence& seq, const DecodeConfig& config,
                      const LogitSource& source, const MaskPlan& plan, Rng& rng);

DecodeResult generate(const TokenSequence& prompt, const DecodeConfig& config,
                      const LogitSource& source);

}  // namespace delta
