#pragma once

#include <cstdint>
#include <random>

namespace grasp {

/// SplitMix64 finalizer; used to decorrelate derived seeds before they reach the engine.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng{splitmix64(seed)}; }

}  // namespace grasp
