// Copyright 2026 The benchmix Authors.
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
#include <algorithm>
#include <cstddef>
#include <numeric>
#include <random>
#include <vector>

namespace benchmix {

/// Seeded pseudo-random source with platform-independent derived draws.
///
/// std::mt19937_64 output is fully specified by the standard, but the std
/// distributions are not, so bounded integers and unit reals are derived here
/// by hand. Every artifact that depends on randomness is therefore
/// byte-reproducible across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform integer in [0, bound). bound must be positive.
  std::uint64_t uniform_index(std::uint64_t bound) {
    // Rejection on the top of the range removes modulo bias.
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % bound;
  }

  /// Uniform real in [0, 1) with 53 bits of precision.
  double uniform_real() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

 private:
  std::mt19937_64 engine_;
};

/// Uniformly samples `count` distinct indices from [0, population) and returns
/// them in ascending order.
inline std::vector<std::size_t> sample_without_replacement(std::size_t population,
                                                           std::size_t count,
                                                           std::uint64_t seed) {
  std::vector<std::size_t> indices(population);
  std::iota(indices.begin(), indices.end(), std::size_t{0});
  Rng rng(seed);
  // Partial Fisher-Yates: the first `count` slots hold the sample.
  for (std::size_t i = 0; i < count && i < population; ++i) {
    const std::size_t j = i + rng.uniform_index(population - i);
    std::swap(indices[i], indices[j]);
  }
  indices.resize(std::min(count, population));
  std::sort(indices.begin(), indices.end());
  return indices;
}

}  // namespace benchmix
