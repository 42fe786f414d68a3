#pragma once

#include <cstdint>
#include <random>

namespace fmre {

// SplitMix64 step, used to spread seed words before feeding them to mt19937_64.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Deterministic child generator for a (master seed, stream, substream) triple.
// Replicates use make_rng(seed, r), estimators inside a replicate
// make_rng(seed, r, estimator_tag), so results do not depend on scheduling.
inline std::mt19937_64 make_rng(std::uint64_t master, std::uint64_t stream = 0,
                                std::uint64_t substream = 0) {
  std::uint64_t s = master;
  std::uint64_t word = splitmix64(s);
  s += (stream + 1) * 0xd1342543de82ef95ULL;
  word ^= splitmix64(s);
  s += (substream + 1) * 0xaf251af3b0f025b5ULL;
  word ^= splitmix64(s);
  return std::mt19937_64(word);
}

}  // namespace fmre
