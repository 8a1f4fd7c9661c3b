// Copyright 2026 The Dissim Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>

namespace dissim {

// SplitMix64. Every per-node random decision in the simulator flows through
// this generator so that campaigns replay bit-identically; any port to
// another language has to reproduce the exact update rule below.
//
//   state += 0x9E3779B97F4A7C15
//   z = state
//   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   return z ^ (z >> 31)
//
// Per-node streams are derived as state0 = campaign_seed ^ ((rank + 1) *
// 0x9E3779B97F4A7C15), and bounded draws use plain modulo reduction
// (next() % bound). The modulo bias is irrelevant at the bounds used here
// and keeps the rule trivial to reimplement.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  static SplitMix64 for_node(std::uint64_t campaign_seed, std::uint32_t rank) {
    return SplitMix64(campaign_seed ^ ((static_cast<std::uint64_t>(rank) + 1) * kGamma));
  }

  std::uint64_t next() {
    state_ += kGamma;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform-ish draw in [0, bound); bound must be nonzero.
  std::uint64_t next_below(std::uint64_t bound) { return next() % bound; }

  // True with probability permille/1000.
  bool chance_permille(std::uint32_t permille) { return next_below(1000) < permille; }

  std::uint8_t next_byte() { return static_cast<std::uint8_t>(next_below(256)); }

 private:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
  std::uint64_t state_;
};

}  // namespace dissim
