// Copyright 2026 The ssplanner Authors
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
#include <utility>
#include <vector>

namespace ssp {

// Every pipeline stage draws its seed as derive_seed(root, "<stage name>"),
// so stages stay independently reproducible from one root seed.
uint64_t derive_seed(uint64_t root, std::string_view name);

// Deterministic random source. All sampling goes through the helpers below
// instead of <random> distributions, whose output the standard leaves
// implementation-defined.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t next_u64() { return gen_(); }

  // Uniform integer in [0, n). n must be > 0.
  uint64_t next_below(uint64_t n);

  // Uniform double in [0, 1) with 53 random bits.
  double next_unit();

  double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  // In-place Fisher-Yates. std::shuffle's draw sequence is not pinned by the
  // standard, so we roll our own.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    if (items.size() < 2) return;
    for (size_t i = items.size() - 1; i > 0; --i) {
      size_t j = static_cast<size_t>(next_below(i + 1));
      std::swap(items[i], items[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace ssp
