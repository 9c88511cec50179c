#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace rdsel {

// Deterministic splittable generator built on SplitMix64 (Steele et al.,
// "Fast splittable pseudorandom number generators"). The state walks a
// Weyl sequence and every output is a finalized mix of it, so streams are
// reproducible across platforms and independent streams can be derived
// from a parent seed plus a tag.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    return mix(state_);
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller; the second deviate is cached.
  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    double u1 = uniform();
    double u2 = uniform();
    // Map u1 into (0, 1] so the log stays finite.
    double r = std::sqrt(-2.0 * std::log(1.0 - u1));
    double a = 2.0 * std::numbers::pi * u2;
    cached_ = r * std::sin(a);
    have_cached_ = true;
    return r * std::cos(a);
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Unbiased index in [0, n) by rejection.
  std::size_t index(std::size_t n) {
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return static_cast<std::size_t>(x % bound);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  // Sample `count` distinct indices from [0, n) without replacement
  // (partial Fisher-Yates over an index vector).
  std::vector<std::size_t> sample_indices(std::size_t n, std::size_t count) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = 0; i < count; ++i) {
      std::size_t j = i + index(n - i);
      std::swap(idx[i], idx[j]);
    }
    idx.resize(count);
    return idx;
  }

  // Derive an independent child stream from this stream's current state
  // and a caller-chosen tag. Does not advance the parent.
  Rng fork(std::uint64_t tag) const { return Rng(mix(state_ ^ mix(tag))); }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ull;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebull;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t state_;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

}  // namespace rdsel
