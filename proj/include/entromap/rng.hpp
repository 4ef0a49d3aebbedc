#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace entromap {

using Seed = std::uint64_t;
using Engine = std::mt19937_64;

/// SplitMix64 finalizer; a bijection on 64-bit words.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an independent stream seed from a base seed and a path of
/// indices, e.g. derive_seed(seed, {trial, size_index, stream_tag}).
/// Distinct paths give statistically unrelated streams.
constexpr Seed derive_seed(Seed base, std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = splitmix64(base);
  for (std::uint64_t p : path) h = splitmix64(h ^ splitmix64(p + 0x632be59bd9b4e019ULL));
  return h;
}

inline Engine make_engine(Seed seed) { return Engine(splitmix64(seed)); }

// Stream tags used when deriving seeds inside the library.
namespace stream {
inline constexpr std::uint64_t kSource = 1;
inline constexpr std::uint64_t kTarget = 2;
inline constexpr std::uint64_t kEvaluation = 3;
inline constexpr std::uint64_t kCovariance = 4;
inline constexpr std::uint64_t kCalibration = 5;
inline constexpr std::uint64_t kTargetCovariance = 6;
}  // namespace stream

}  // namespace entromap
