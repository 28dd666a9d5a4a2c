// Seeded substream derivation. Every random draw in the library flows through
// an engine obtained here, so a run is a pure function of (config, seed) and
// independent consumers (arrivals, requests, feedback, shuffles) never share
// stream state.
#pragma once

#include <cstdint>
#include <random>

namespace rade {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Purpose tags keep unrelated substreams apart even for equal index tuples.
enum class Stream : std::uint64_t {
  arrivals = 1,
  request = 2,
  feedback = 3,
  random_split = 4,
  ogd_shuffle = 5,
  model_init = 6,
  train_shuffle = 7,
};

// Engine for the substream keyed by (seed, purpose, a, b, c).
inline std::mt19937_64 substream(std::uint64_t seed, Stream purpose, std::uint64_t a = 0,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t s = splitmix64(seed);
  s = splitmix64(s ^ static_cast<std::uint64_t>(purpose));
  s = splitmix64(s ^ a);
  s = splitmix64(s ^ b);
  s = splitmix64(s ^ c);
  return std::mt19937_64(s);
}

inline double uniform01(std::mt19937_64& eng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(eng);
}

}  // namespace rade
