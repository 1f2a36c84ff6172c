#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace geonet::rng {

// splitmix64 finalizer. Used both as the stream step and as the seed mixer so
// the whole project shares one portable, platform-independent bit sequence.
constexpr std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Derives a child seed from a root seed and a tuple of indices. Candidate
// substreams are derive(seed, {node_index, scale_index, candidate_index});
// benchmark repeats are derive(base_seed, {repeat}).
constexpr std::uint64_t derive(std::uint64_t seed,
                               std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = mix(seed);
  for (std::uint64_t p : parts) h = mix(h ^ mix(p));
  return h;
}

// Domain-separation tags for derive(); arbitrary fixed constants.
inline constexpr std::uint64_t kSplitTag = 0x53504c4954ULL;   // dataset splits
inline constexpr std::uint64_t kSampleTag = 0x53414d50ULL;    // generator sampling
inline constexpr std::uint64_t kNoiseTag = 0x4e4f495345ULL;   // surrogate noise

// Counter-based splitmix64 stream.
class Stream {
public:
  explicit Stream(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() { return mix(state_++); }

  // Uniform double in [0, 1), 53 significant bits.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double next_in(double lo, double hi) { return lo + next_unit() * (hi - lo); }

  // Standard normal via Box-Muller; consumes exactly two draws.
  double next_gauss() {
    const double u1 = next_unit();
    const double u2 = next_unit();
    const double r = std::sqrt(-2.0 * std::log1p(-u1));
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

private:
  std::uint64_t state_;
};

} // namespace geonet::rng
