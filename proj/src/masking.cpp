#include "delta/masking.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace delta {

std::size_t masked_count(double r_mask, std::size_t n) {
  if (!(r_mask >= 0.0 && r_mask <= 1.0)) {
    throw Error(ErrorCode::invalid_input, "r_mask must be in [0, 1]");
  }
  const double product = r_mask * static_cast<double>(n);
  auto m = static_cast<std::size_t>(std::floor(product));
  // Values like 0.7 are not exact in binary; treat products within a few
  // ulps of the next integer as that integer.
  const double next = static_cast<double>(m + 1);
  if (next - product <= 4 * std::numeric_limits<double>::epsilon() * next) ++m;
  return std::min(m, n);
}

MaskPlan select_mask_indices(const TokenSequence& seq, double r_mask,
                             bool mask_generated, TokenId mask_token, Rng& rng) {
  MaskPlan plan;
  plan.mask_token = mask_token;
  plan.eligible_len = mask_generated ? seq.size() : seq.prompt_len();
  const std::size_t n = plan.eligible_len;
  const std::size_t m = masked_count(r_mask, n);

  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.uniform_below(n - i));
    std::swap(pool[i], pool[j]);
  }
  plan.indices.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(m));
  std::sort(plan.indices.begin(), plan.indices.end());
  return plan;
}

TokenSequence apply_mask(const TokenSequence& seq, const MaskPlan& plan) {
  TokenSequence out = seq;
  for (std::size_t i : plan.indices) {
    if (i >= seq.size()) {
      throw Error(ErrorCode::invalid_plan,
                  "mask index " + std::to_string(i) + " outside sequence of length " +
                      std::to_string(seq.size()));
    }
    out.set(i, plan.mask_token);
  }
  return out;
}

}  // namespace delta
