#pragma once

// Random streams.
//
// Every chain owns an std::mt19937_64 engine. Engines are never shared; a
// master seed is split into independent streams by hashing the pair
// (stream id, purpose) through SplitMix64:
//
//   stream_seed(master, id, purpose) =
//       splitmix64(master ^ splitmix64(id * 0x100000001B3 + purpose))
//
// Purposes used by the experiment runner are listed in StreamPurpose.

#include <cstdint>
#include <random>

namespace opad {

using Rng = std::mt19937_64;

enum class StreamPurpose : std::uint64_t {
  kChain = 1,         // MH proposals and acceptance draws
  kInitialState = 2,  // uniform initial state
  kData = 3,          // per-chain synthetic dataset
};

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

constexpr std::uint64_t stream_seed(std::uint64_t master, std::uint64_t id,
                                    StreamPurpose purpose) noexcept {
  return splitmix64(master ^ splitmix64(id * 0x100000001B3ull + static_cast<std::uint64_t>(purpose)));
}

inline Rng make_rng(std::uint64_t seed) { return Rng(splitmix64(seed)); }

/// Uniform double in [0, 1) built from the top 53 bits of one draw.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n).
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

}  // namespace opad
