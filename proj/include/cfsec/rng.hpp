// cfsec - secure cell-free massive MIMO downlink simulator and optimizer
// Copyright (c) 2026 cfsec contributors
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

namespace cfsec {

// Splittable seeding: a master seed plus a stream tag yields an independent
// substream seed. Scenario generation, shadowing, Monte-Carlo draws and
// per-realization experiments each derive their own tag, so results are
// reproducible no matter which subset of streams a caller consumes, and in
// which order.
struct SplitMix64 {
  std::uint64_t state;

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
};

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag) {
  SplitMix64 mix{master ^ (0xD1B54A32D192ED03ULL * (tag + 1))};
  mix.next();
  return mix.next();
}

inline std::mt19937_64 make_engine(std::uint64_t master, std::uint64_t tag) {
  return std::mt19937_64(derive_seed(master, tag));
}

// Well-known stream tags. Keeping them in one place avoids accidental reuse
// of the same substream for two different purposes.
namespace stream {
inline constexpr std::uint64_t kApPositions = 1;
inline constexpr std::uint64_t kUserPositions = 2;
inline constexpr std::uint64_t kEvePosition = 3;
inline constexpr std::uint64_t kShadowing = 4;
inline constexpr std::uint64_t kRandomSelection = 5;
inline constexpr std::uint64_t kSolverInit = 6;
inline constexpr std::uint64_t kLipschitz = 7;
inline constexpr std::uint64_t kMonteCarlo = 8;
inline constexpr std::uint64_t kRealizationBase = 1000;
}  // namespace stream

}  // namespace cfsec
