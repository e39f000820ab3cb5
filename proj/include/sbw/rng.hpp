// Copyright 2026 The SBW Authors
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

// Seeded randomness. The engine is std::mt19937_64, whose output sequence is
// fixed by the standard; distributions are built here from raw engine bits
// because the standard library distributions differ between vendors.

#ifndef SBW_RNG_HPP_
#define SBW_RNG_HPP_

#include <cstdint>
#include <random>
#include <string_view>

namespace sbw {

std::uint64_t SplitMix64(std::uint64_t x);

// Seed of a named sub-stream ("costs", "election", ...) of a master seed.
std::uint64_t DeriveSeed(std::uint64_t master, std::string_view stream);
std::uint64_t DeriveSeed(std::uint64_t master, std::string_view stream,
                         std::uint64_t index);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t NextU64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double Uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform01(); }

  // Uniform on {0, ..., n-1}, unbiased by rejection.
  std::uint64_t Below(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
};

}  // namespace sbw

#endif  // SBW_RNG_HPP_
