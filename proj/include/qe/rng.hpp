#pragma once

#include <cstdint>
#include <string_view>

namespace qe {

// xoshiro256** seeded through splitmix64. Hand-rolled so that fold plans,
// bootstrap resamples and synthetic corpora are bit-identical across
// standard libraries and platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& w : state_) w = splitmix64(x);
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform in [0, n). Modulo bias is immaterial at the n used here.
  std::uint64_t below(std::uint64_t n) { return n ? next() % n : 0; }

  // Uniform double in [0, 1).
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  static std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  static std::uint64_t rotl(std::uint64_t v, int k) {
    return (v << k) | (v >> (64 - k));
  }
  std::uint64_t state_[4];
};

// FNV-1a, used for config digests and seed derivation.
inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Derives the per-purpose seed ("folds", "bootstrap", "synth", ...) from the
// single run seed, so one --seed reproduces every random decision in a run.
inline std::uint64_t sub_seed(std::uint64_t seed, std::string_view purpose) {
  std::uint64_t x = seed ^ fnv1a64(purpose);
  return Rng::splitmix64(x);
}

}  // namespace qe
