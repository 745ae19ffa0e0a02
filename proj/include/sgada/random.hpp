// Copyright 2026 The SGADA Authors.
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

// Seeded pseudo-random streams.
//
// Every random draw in the project comes from Xoshiro256StarStar seeded via
// SplitMix64, so that a port to another language reproduces the same data:
//
//   state[k] = splitmix64 output k (k = 0..3) starting from `seed`
//   uniform()  = (next() >> 11) * 2^-53                 in [0, 1)
//   normal()   = sqrt(-2 ln(1 - u1)) * cos(2 pi u2)     one draw per pair
//   below(n)   = next() % n after rejecting next() >= 2^64 - (2^64 % n)
//   shuffle    = Fisher-Yates from the back, j = below(i + 1)
//
// Independent streams are keyed with derive_seed(seed, tag).

#ifndef SGADA_RANDOM_HPP_
#define SGADA_RANDOM_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace sgada {

/// One SplitMix64 step: advances `state` and returns the mixed output.
std::uint64_t splitmix64(std::uint64_t& state);

/// Stream key for a named sub-stream of `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag);
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag);

class Xoshiro256StarStar {
 public:
  explicit Xoshiro256StarStar(std::uint64_t seed);

  std::uint64_t next();
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  std::uint64_t below(std::uint64_t n);

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t s_[4];
};

using Rng = Xoshiro256StarStar;

/// 0..n-1 shuffled by a fresh stream seeded with `seed`.
std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed);

}  // namespace sgada

#endif  // SGADA_RANDOM_HPP_
