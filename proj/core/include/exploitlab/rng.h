// Copyright 2026 The ExploitLab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef EXPLOITLAB_RNG_H_
#define EXPLOITLAB_RNG_H_

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace exploitlab {

inline constexpr uint64_t SplitMix64(uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Derives a child seed from a parent seed and a path of integer tags.
// Distinct paths give statistically independent streams.
inline constexpr uint64_t DeriveSeed(uint64_t parent,
                                     std::initializer_list<uint64_t> path) {
  uint64_t h = SplitMix64(parent ^ 0x6a09e667f3bcc908ULL);
  for (uint64_t tag : path) h = SplitMix64(h ^ SplitMix64(tag + 0x3c6ef372fe94f82bULL));
  return h;
}

// Counter-based generator: the n-th output is a pure function of
// (key, n), so the full state is two integers and trivially serializable.
// Distribution transforms are implemented here rather than via <random> so
// that sequences are identical across standard library implementations.
class CounterRng {
 public:
  explicit CounterRng(uint64_t key = 0, uint64_t counter = 0)
      : key_(key), counter_(counter) {}

  uint64_t NextU64() {
    return SplitMix64(key_ ^ SplitMix64(counter_++ ^ 0xa0761d6478bd642fULL));
  }

  // Uniform in [0, 1) with 53 bits of resolution.
  double Uniform() { return static_cast<double>(NextU64() >> 11) * 0x1.0p-53; }

  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

  // Uniform integer in [0, n). n must be positive.
  uint64_t UniformInt(uint64_t n) {
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
      x = NextU64();
    } while (x >= limit);
    return x % n;
  }

  // Standard normal via Box-Muller; always consumes two draws.
  double Normal() {
    const double u1 = 1.0 - Uniform();  // (0, 1]
    const double u2 = Uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  uint64_t key() const { return key_; }
  uint64_t counter() const { return counter_; }

  friend bool operator==(const CounterRng&, const CounterRng&) = default;

 private:
  uint64_t key_;
  uint64_t counter_;
};

}  // namespace exploitlab

#endif  // EXPLOITLAB_RNG_H_
