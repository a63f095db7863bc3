#pragma once

// Portable deterministic random streams.
//
// Every stream is a std::mt19937_64 engine (fully specified by the C++
// standard) seeded from a 64-bit value. Uniform draws are computed here
// rather than with <random> distributions, whose outputs are
// implementation-defined:
//   uniform01()      = (next() >> 11) * 2^-53
//   uniform_below(n) = rejection sampling on next() with limit 2^64 - (2^64 mod n)
// Sub-streams are derived with derive_seed(parent, tag), which mixes the tag
// into the parent with the splitmix64 finalizer.

#include <cstdint>
#include <random>
#include <string_view>

namespace delta {

std::uint64_t splitmix64(std::uint64_t x);

std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t tag);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view text);

/// Seed for one dataset example, independent of evaluation order.
std::uint64_t example_seed(std::uint64_t seed, std::string_view example_id);

// Stream tags.
inline constexpr std::uint64_t kMaskStream = 0x6d61736b;    // "mask"
inline constexpr std::uint64_t kSampleStream = 0x73616d70;  // "samp"

class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  double uniform01();
  std::uint64_t uniform_below(std::uint64_t n);

private:
  std::mt19937_64 engine_;
};

}  // namespace delta
