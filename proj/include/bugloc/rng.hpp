#pragma once

#include <cstdint>
#include <vector>

// Deterministic random generation for every sampling decision in the toolkit.
//
// The generator is xoshiro256** seeded through SplitMix64, both with their
// published reference algorithms. They are implemented here (rather than
// using std::mt19937_64 + distributions) because std::uniform_int_distribution
// is not bit-reproducible across standard libraries, and dataset artifacts
// must reproduce byte-for-byte on any platform and in any future release.

namespace bugloc {

// SplitMix64 finalizer. Also used as the toolkit's generic 64-bit hash mixer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class SplitMix64 {
public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

private:
  std::uint64_t state_;
};

// Derives the seed for the k-th parallel subtask of a seeded run. Equivalent
// to jumping the SplitMix64 stream of `base` to position `index`.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  return mix64(base + index * 0x9e3779b97f4a7c15ULL);
}

class Xoshiro256ss {
public:
  explicit Xoshiro256ss(std::uint64_t seed) {
    SplitMix64 sm(seed);
    for (auto& word : state_) word = sm.next();
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

  // Unbiased integer in [0, n) via rejection sampling; n must be > 0.
  std::uint64_t bounded(std::uint64_t n) {
    const std::uint64_t min = (0 - n) % n;
    std::uint64_t r;
    do {
      r = next();
    } while (r < min);
    return r % n;
  }

  // Uniform double in [0, 1) with 53 bits of randomness.
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[bounded(i)]);
    }
  }

private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t state_[4];
};

}  // namespace bugloc
