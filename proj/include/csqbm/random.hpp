#pragma once

#include <cstdint>
#include <random>

namespace csqbm {

using Rng = std::mt19937_64;

/// Named generator streams split off a root seed.
enum class Stream : std::uint32_t {
  kEnvironment = 0,
  kExploration = 1,
  kReplay = 2,
  kInit = 3,
  kEvaluation = 4,
  kSampling = 5,
  kGradcheck = 6,
};

/// Derives an independent generator for `stream` from `root_seed`.
///
/// Split rule: the child is seeded with std::seed_seq{lo32(root), hi32(root),
/// stream, worker}. Distinct (stream, worker) pairs give decorrelated
/// generators, and the mapping is stable across runs.
inline Rng split_rng(std::uint64_t root_seed, Stream stream, std::uint32_t worker = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(root_seed & 0xffffffffu),
                    static_cast<std::uint32_t>(root_seed >> 32),
                    static_cast<std::uint32_t>(stream), worker};
  return Rng(seq);
}

/// Uniform double in [0, 1) from the top 53 bits of one draw.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double standard_normal(Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

}  // namespace csqbm
