#include "delta/decoder.hpp"

#include <algorithm>
#include <cmath>

namespace delta {

const char* to_string(StopReason reason) {
  return reason == StopReason::stop_token ? "stop_token" : "max_tokens";
}

LogitVector delta_combine(std::span<const double> original, std::span<const double> masked,
                          double alpha) {
  if (original.size() != masked.size()) {
    throw Error(ErrorCode::invalid_input,
                "logit length mismatch: " + std::to_string(original.size()) + " vs " +
                    std::to_string(masked.size()));
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw Error(ErrorCode::invalid_input, "alpha must be in [0, 1]");
  }
  LogitVector out(original.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = (1.0 + alpha) * original[i] - alpha * masked[i];
  }
  return out;
}

std::vector<TokenId> apc_head(std::span<const double> original, double beta) {
  if (!(beta >= 0.0 && beta <= 1.0)) {
    throw Error(ErrorCode::invalid_input, "beta must be in [0, 1]");
  }
  const ProbabilityDistribution probs = softmax(original, 1.0);
  const double threshold = beta * *std::max_element(probs.begin(), probs.end());
  std::vector<TokenId> head;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] >= threshold) head.emplace_back(static_cast<std::uint32_t>(i));
  }
  return head;
}

DecodeConfig resolve_config(DecodeConfig config, const Vocabulary& vocab) {
  if (!config.mask_token) config.mask_token = vocab.eos();
  if (!config.stop_tokens) config.stop_tokens = std::vector<TokenId>{vocab.eos()};
  validate(config, vocab.size());
  return config;
}

TokenId sample_token(std::span<const double> distribution, Rng& rng) {
  if (distribution.empty()) throw Error(ErrorCode::invalid_input, "sample from empty distribution");
  const double u = rng.uniform01();
  double cumulative = 0.0;
  std::size_t last_nonzero = distribution.size();
  for (std::size_t i = 0; i < distribution.size(); ++i) {
    if (distribution[i] <= 0.0) continue;
    last_nonzero = i;
    cumulative += distribution[i];
    if (u < cumulative) return TokenId(static_cast<std::uint32_t>(i));
  }
  if (last_nonzero == distribution.size()) {
    throw Error(ErrorCode::internal_invariant, "distribution has no mass");
  }
  // u landed in the rounding gap above the accumulated total.
  return TokenId(static_cast<std::uint32_t>(last_nonzero));
}

Rng sampling_stream(std::uint64_t seed, std::size_t step) {
  return Rng(derive_seed(derive_seed(seed, kSampleStream), step));
}

Rng mask_stream(std::uint64_t seed, std::size_t step, bool remask_each_step) {
  return Rng(derive_seed(derive_seed(seed, kMaskStream), remask_each_step ? step : 0));
}

namespace {

LogitVector query(const LogitSource& source, const TokenSequence& seq) {
  LogitVector v = source.logits(seq);
  if (v.size() != source.vocab_size()) {
    throw Error(ErrorCode::backend, "backend returned " + std::to_string(v.size()) +
                                        " logits for vocabulary of " +
                                        std::to_string(source.vocab_size()));
  }
  for (double x : v) {
    if (!std::isfinite(x)) throw Error(ErrorCode::backend, "backend returned a non-finite logit");
  }
  return v;
}

}  // namespace

StepTrace decode_step(const TokenSequence& seq, const DecodeConfig& config,
                      const LogitSource& source, const MaskPlan& plan, Rng& rng) {
  if (seq.empty()) throw Error(ErrorCode::invalid_input, "decode_step on an empty sequence");

  StepTrace trace;
  trace.step = seq.size() - seq.prompt_len();
  trace.mask_plan = plan;
  trace.original_logits = query(source, seq);
  trace.masked_logits = query(source, apply_mask(seq, plan));
  trace.combined_logits =
      delta_combine(trace.original_logits, trace.masked_logits, config.alpha);
  trace.head_set = apc_head(trace.original_logits, config.beta);
  if (trace.head_set.empty()) {
    throw Error(ErrorCode::internal_invariant, "plausibility head is empty");
  }
  trace.distribution =
      softmax_over(trace.combined_logits, trace.head_set, config.temperature);

  if (config.mode == DecodeMode::greedy) {
    TokenId best = trace.head_set.front();
    for (TokenId t : trace.head_set) {
      if (trace.combined_logits[t.index()] > trace.combined_logits[best.index()]) best = t;
    }
    trace.chosen = best;
  } else {
    trace.chosen = sample_token(trace.distribution, rng);
  }
  return trace;
}

DecodeResult generate(const TokenSequence& prompt, const DecodeConfig& config,
                      const LogitSource& source) {
  const DecodeConfig cfg = resolve_config(config, source.vocabulary());
  if (prompt.prompt_len() != prompt.size()) {
    throw Error(ErrorCode::invalid_input, "generate expects a prompt-only sequence");
  }

  DecodeResult result;
  result.sequence = prompt;
  const auto& stops = *cfg.stop_tokens;
  // The eligible region only changes between steps when generated tokens are
  // maskable; otherwise one plan serves the whole generation.
  const bool replan = cfg.remask_each_step || cfg.mask_generated;
  MaskPlan plan;

  std::vector<TokenId> visible;
  for (std::size_t step = 0; step < cfg.max_new_tokens; ++step) {
    if (step == 0 || replan) {
      Rng mrng = mask_stream(cfg.seed, step, cfg.remask_each_step);
      plan = select_mask_indices(result.sequence, cfg.r_mask, cfg.mask_generated,
                                 *cfg.mask_token, mrng);
    }
    Rng srng = sampling_stream(cfg.seed, step);
    StepTrace trace = decode_step(result.sequence, cfg, source, plan, srng);
    const TokenId chosen = trace.chosen;
    result.traces.push_back(std::move(trace));
    result.sequence.push_back(chosen);
    if (std::find(stops.begin(), stops.end(), chosen) != stops.end()) {
      result.stop_reason = StopReason::stop_token;
      break;
    }
    visible.push_back(chosen);
  }
  if (result.stop_reason != StopReason::stop_token) result.stop_reason = StopReason::max_tokens;
  result.text = detokenize(visible, source.vocabulary());
  return result;
}

}  // namespace delta
