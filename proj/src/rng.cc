// Copyright 2026 The synthcorpus Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "synthcorpus/rng.h"

#include <cmath>
#include <numbers>

namespace synthcorpus {

std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t HashLabel(std::string_view label) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::uint64_t DeriveSeed(std::uint64_t root, std::string_view label) {
  return SplitMix64(SplitMix64(root) ^ HashLabel(label));
}

std::uint64_t DeriveSeed(std::uint64_t root, std::uint64_t index) {
  return SplitMix64(SplitMix64(root) + SplitMix64(index ^ 0xA5A5A5A5A5A5A5A5ULL));
}

std::uint64_t UniformIndex(Rng& rng, std::uint64_t n) {
  if (n <= 1) return 0;
  // 2^64 mod n leading values are rejected so x % n is unbiased.
  const std::uint64_t threshold = (0 - n) % n;
  while (true) {
    const std::uint64_t x = rng();
    if (x >= threshold) return x % n;
  }
}

double StandardNormal(Rng& rng) {
  // 53-bit uniforms in (0, 1].
  const double u1 = (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace synthcorpus
