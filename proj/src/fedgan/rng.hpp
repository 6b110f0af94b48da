/*
 * Copyright 2026 The FedGAN Authors
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

#ifndef FEDGAN_RNG_HPP_
#define FEDGAN_RNG_HPP_

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace fedgan {

using Rng = std::mt19937_64;

// Stream purposes; mixed into the seed so that streams never coincide.
enum class Stream : std::uint64_t {
  kInit = 0x1001,
  kClient = 0x2002,
  kSelect = 0x3003,
  kMetric = 0x4004,
  kPartition = 0x5005,
  kOracle = 0x6006,
  kData = 0x7007,
};

// A generator that is a pure function of its key. Keys are split into 32-bit
// words so that seed_seq sees the full 64-bit inputs.
inline Rng make_stream(std::uint64_t seed, Stream purpose,
                       std::initializer_list<std::uint64_t> key = {}) {
  std::vector<std::uint32_t> words;
  auto push = [&words](std::uint64_t v) {
    words.push_back(static_cast<std::uint32_t>(v));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
  };
  push(seed);
  push(static_cast<std::uint64_t>(purpose));
  for (auto k : key) push(k);
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

// splitmix64 finalizer; derives independent seeds for auxiliary data sets.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace fedgan

#endif  // FEDGAN_RNG_HPP_
