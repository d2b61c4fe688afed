/* Copyright 2026 The BlockBERT-cpp Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef BLOCKBERT_CORE_RANDOM_H_
#define BLOCKBERT_CORE_RANDOM_H_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>

namespace blockbert {

// std::mt19937_64 output is fixed by the standard; the conversions below are
// written out so that sampled values do not depend on the library's
// distribution implementations.

using Rng = std::mt19937_64;

// SplitMix64 finalizer over (seed, stream, index); used to derive
// independent per-step and per-row seeds.
inline std::uint64_t MixSeed(std::uint64_t seed, std::uint64_t stream,
                             std::uint64_t index = 0) {
  std::uint64_t z = seed ^ (stream * 0x9E3779B97F4A7C15ull) ^
                    (index * 0xD1B54A32D192ED03ull);
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Uniform on [0, 1) with 53 random bits.
inline double Uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n).
inline std::size_t UniformIndex(Rng& rng, std::size_t n) {
  return static_cast<std::size_t>(Uniform01(rng) * static_cast<double>(n));
}

// Box-Muller; consumes two draws per call.
inline double StandardNormal(Rng& rng) {
  const double u1 = 1.0 - Uniform01(rng);  // (0, 1]
  const double u2 = Uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace blockbert

#endif  // BLOCKBERT_CORE_RANDOM_H_
