// Copyright (C) 2026 The semio Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace semio {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t fnv1a64(std::string_view s,
                                       std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Order-sensitive hash of a seed and a sequence of keys.
class KeyHash {
 public:
  explicit constexpr KeyHash(std::uint64_t seed) : h_(splitmix64(seed)) {}

  constexpr KeyHash& add(std::string_view s) {
    h_ = splitmix64(fnv1a64(s, h_) ^ static_cast<std::uint64_t>(s.size()));
    return *this;
  }
  constexpr KeyHash& add(std::int64_t v) {
    h_ = splitmix64(h_ ^ static_cast<std::uint64_t>(v));
    return *this;
  }
  constexpr std::uint64_t value() const { return h_; }
  // Uniform in [0, 1) with 53 bits of resolution.
  constexpr double unit() const {
    return static_cast<double>(h_ >> 11) * 0x1.0p-53;
  }

 private:
  std::uint64_t h_;
};

// Portable seeded generator. std::mt19937_64 output is fixed by the
// standard; the distributions are not, so index draws are done here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform integer in [0, n), rejection sampled.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t v;
    do {
      v = engine_();
    } while (v >= limit);
    return v % n;
  }

  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace semio
