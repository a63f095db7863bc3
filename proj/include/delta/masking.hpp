#pragma once

#include <cstddef>
#include <vector>

#include "delta/core.hpp"
#include "delta/rng.hpp"

namespace delta {

/// Positions replaced by the mask token. `indices` is sorted ascending and
/// holds floor(r_mask * eligible_len) distinct positions < eligible_len.
struct MaskPlan {
  std::vector<std::size_t> indices;
  TokenId mask_token;
  std::size_t eligible_len = 0;

  friend bool operator==(const MaskPlan&, const MaskPlan&) = default;
};

/// floor(r_mask * n), guarded against the product landing a hair below an
/// integer (0.7 * 10 == 6.999...).
std::size_t masked_count(double r_mask, std::size_t n);

/// Samples the masked positions uniformly without replacement from the
/// eligible region: the prompt, or the whole sequence when mask_generated.
/// Uses a partial Fisher-Yates shuffle driven by rng.uniform_below.
MaskPlan select_mask_indices(const TokenSequence& seq, double r_mask,
                             bool mask_generated, TokenId mask_token, Rng& rng);

TokenSequence apply_mask(const TokenSequence& seq, const MaskPlan& plan);

}  // namespace delta
