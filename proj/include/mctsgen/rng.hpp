#pragma once

#include <cstdint>
#include <initializer_list>
#include <string_view>

namespace mctsgen::rng {

// Platform-independent primitives. std::uniform_*_distribution is not
// specified bit-for-bit, so every seeded draw in the library goes through
// these instead.

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Folds a sequence of words into one key: h <- splitmix64(h ^ v).
constexpr std::uint64_t mix(std::initializer_list<std::uint64_t> words) {
  std::uint64_t h = 0;
  for (auto w : words) h = splitmix64(h ^ w);
  return h;
}

/// FNV-1a over bytes; used to key draws on text.
constexpr std::uint64_t hash_text(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

/// Uniform double in [0, 1) from the top 53 bits.
constexpr double to_unit(std::uint64_t x) {
  return static_cast<double>(x >> 11) * 0x1.0p-53;
}

/// Sequential generator (splitmix64 stream).
class Stream {
 public:
  explicit constexpr Stream(std::uint64_t seed) : state_(seed) {}

  constexpr std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  constexpr double uniform() { return to_unit(next()); }

  /// Integer in [0, n). Uses rejection so every value is equally likely.
  constexpr std::uint64_t below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x = next();
    while (x >= limit) x = next();
    return x % n;
  }

  /// Integer in [lo, hi].
  constexpr std::int64_t between(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo) + 1));
  }

  constexpr bool bernoulli(double p) { return uniform() < p; }

 private:
  std::uint64_t state_;
};

}  // namespace mctsgen::rng
