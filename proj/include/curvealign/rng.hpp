#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace curvealign {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Counter-based sub-seed: the result depends only on the master seed and the
/// path of counters, so adding curves never reshuffles earlier streams.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = mix64(master);
  for (std::uint64_t p : path) s = mix64(s ^ mix64(p + 0x632be59bd9b4e019ULL));
  return s;
}

// Stream tags for derive_seed.
inline constexpr std::uint64_t kStreamShift = 1;
inline constexpr std::uint64_t kStreamNoise = 2;
inline constexpr std::uint64_t kStreamWander = 3;
inline constexpr std::uint64_t kStreamPowerline = 4;
inline constexpr std::uint64_t kStreamStarts = 5;
inline constexpr std::uint64_t kStreamReplicate = 6;

using Rng = std::mt19937_64;

}  // namespace curvealign
