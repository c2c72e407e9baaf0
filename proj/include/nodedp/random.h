/*
 * Copyright 2026 The nodedp Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef NODEDP_RANDOM_H_
#define NODEDP_RANDOM_H_

#include <cstdint>
#include <initializer_list>
#include <random>

namespace nodedp {

// Named sub-streams derived from the single user seed.
enum class Stream : std::uint64_t {
  kGen = 1,
  kSplit = 2,
  kSampler = 3,
  kNoise = 4,
  kInit = 5,
  kAudit = 6,
  kEval = 7,
};

using Rng = std::mt19937_64;

std::uint64_t SplitMix64(std::uint64_t x);

// Order-sensitive hash of (seed, parts...). Used as a counter-based key so a
// coin for a given (node, edge, iteration) is the same in every run that
// shares the seed, independent of loop order.
std::uint64_t MixKey(std::uint64_t seed, std::initializer_list<std::uint64_t> parts);

// Uniform double in [0, 1) from the top 53 bits of the key.
inline double UniformFromKey(std::uint64_t key) {
  return static_cast<double>(SplitMix64(key) >> 11) * 0x1.0p-53;
}

Rng MakeRng(std::uint64_t seed, Stream stream, std::uint64_t index = 0);

}  // namespace nodedp

#endif  // NODEDP_RANDOM_H_
