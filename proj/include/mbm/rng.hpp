#pragma once

#include <cstdint>
#include <random>

namespace mbm {

/// SplitMix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed of the sub-stream addressed by (path, component) under a master seed.
/// Counter-based: any stream can be regenerated independently of the others.
constexpr std::uint64_t stream_seed(std::uint64_t master, std::uint64_t path,
                                    std::uint64_t component) {
  return splitmix64(splitmix64(splitmix64(master) ^ path) ^ (component + 0x51ED27ULL));
}

using Engine = std::mt19937_64;

inline Engine make_stream(std::uint64_t master, std::uint64_t path, std::uint64_t component) {
  return Engine(stream_seed(master, path, component));
}

}  // namespace mbm
