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

#include "ssplanner/rng.hpp"

namespace ssp {

namespace {
constexpr uint64_t kFnvOffset = 0xcbf29ce484222325ull;
constexpr uint64_t kFnvPrime = 0x100000001b3ull;

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}
}  // namespace

uint64_t derive_seed(uint64_t root, std::string_view name) {
  uint64_t h = kFnvOffset;
  for (unsigned char c : name) {
    h ^= c;
    h *= kFnvPrime;
  }
  return splitmix64(root ^ h);
}

uint64_t Rng::next_below(uint64_t n) {
  // Rejection sampling keeps the draw unbiased.
  const uint64_t limit = ~uint64_t{0} - (~uint64_t{0} % n);
  uint64_t v = gen_();
  while (v >= limit) v = gen_();
  return v % n;
}

double Rng::next_unit() {
  return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
}

}  // namespace ssp
