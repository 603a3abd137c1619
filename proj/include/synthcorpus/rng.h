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

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace synthcorpus {

using Rng = std::mt19937_64;

std::uint64_t SplitMix64(std::uint64_t x);

// Stable 64-bit hash of a label (FNV-1a); independent of std::hash.
std::uint64_t HashLabel(std::string_view label);

// Child seeds. Every random stream in the toolkit is derived from a root
// seed through these, so one number reproduces a whole pipeline and worker
// count never changes results.
std::uint64_t DeriveSeed(std::uint64_t root, std::string_view label);
std::uint64_t DeriveSeed(std::uint64_t root, std::uint64_t index);

inline Rng MakeRng(std::uint64_t seed) { return Rng(SplitMix64(seed)); }

// Uniform integer in [0, n). Implemented locally so streams are identical
// across standard library implementations.
std::uint64_t UniformIndex(Rng& rng, std::uint64_t n);

// Standard normal via Box-Muller; same portability reason as above.
double StandardNormal(Rng& rng);

template <typename It>
void Shuffle(It first, It last, Rng& rng) {
  const auto n = static_cast<std::uint64_t>(last - first);
  for (std::uint64_t i = n; i > 1; --i) {
    const auto j = UniformIndex(rng, i);
    std::iter_swap(first + (i - 1), first + j);
  }
}

}  // namespace synthcorpus
