// univoice/rng.hpp
//
// Counter-based randomness. Every random quantity in the project is a pure
// function of a 64-bit key chain, so training, synthesis and inference are
// reproducible from a single seed regardless of evaluation order.

// Copyright 2026  UniVoice contributors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef UNIVOICE_RNG_HPP_
#define UNIVOICE_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <cstring>
#include <initializer_list>
#include <numbers>
#include <vector>

namespace uv::rng {

// splitmix64 finalizer (Steele et al.)
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Fold an arbitrary tuple of 64-bit parts into one key.
inline std::uint64_t key(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x853c49e6748fea9bULL;
  for (std::uint64_t p : parts) h = mix64(h ^ p);
  return h;
}

// uniform in (0, 1]; never returns 0 so log() stays finite
inline double u01(std::uint64_t k) {
  return static_cast<double>((mix64(k) >> 11) + 1) * 0x1.0p-53;
}

// standard normal via Box-Muller on two derived streams
inline double gaussian(std::uint64_t k) {
  const double u1 = u01(mix64(k ^ 0x6a09e667f3bcc908ULL));
  const double u2 = u01(mix64(k ^ 0xbb67ae8584caa73bULL));
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

inline double uniform(std::uint64_t k, double lo, double hi) {
  return lo + (hi - lo) * u01(k);
}

// Small sequential generator for shuffles and bulk init where a counter
// index is inconvenient. splitmix64 stream.
class Sequence {
 public:
  explicit Sequence(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }
  double u01() { return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53; }
  double gaussian() { return rng::gaussian(next()); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

  // unbiased bounded integer (Lemire)
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) return 0;
    while (true) {
      std::uint64_t x = next();
      __uint128_t m = static_cast<__uint128_t>(x) * n;
      std::uint64_t l = static_cast<std::uint64_t>(m);
      if (l >= (0ULL - n) % n) return static_cast<std::uint64_t>(m >> 64);
    }
  }

  template <typename T>
  void shuffle(std::vector<T> &v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
};

// FNV-1a over raw bytes; used to derive content digests for e.g. keying
// per-speaker sampling chains by what the features are, not where they sit.
inline std::uint64_t fnv1a(const void *data, std::size_t n) {
  const auto *p = static_cast<const unsigned char *>(data);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t fnv1a(const std::vector<double> &v) {
  return fnv1a(v.data(), v.size() * sizeof(double));
}

}  // namespace uv::rng

#endif  // UNIVOICE_RNG_HPP_
