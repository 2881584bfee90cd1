/**
 * Copyright 2026 The tpaware Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef TPAWARE_RNG_HPP
#define TPAWARE_RNG_HPP

#include <cstdint>
#include <random>

#include "tpaware/matrix.hpp"

namespace tpaware {

// Portable random stream, algorithm tag "mt64-v1".
//
// std::mt19937_64 is bit-specified by the standard, but the std::*_distribution
// adaptors are not, so bounded integers and normals are derived here:
//   below(n):  rejection sampling on raw 64-bit draws, then x % n
//   uniform(): (x >> 11) * 2^-53, in [0, 1)
//   normal():  Box-Muller on (1 - uniform(), uniform()), cos branch first
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  /// Uniform integer in [lo, hi].
  std::int64_t between(std::int64_t lo, std::int64_t hi);

  double uniform();
  double normal();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// SplitMix64 finaliser of (seed, stream); decorrelates per-purpose streams.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream);

Matrix<float> normal_matrix(std::size_t rows, std::size_t cols, Rng& rng);

/// Uniform integers in [lo, hi], stored as T.
template <typename T>
Matrix<T> integer_matrix(std::size_t rows, std::size_t cols, std::int64_t lo, std::int64_t hi, Rng& rng) {
  Matrix<T> out(rows, cols);
  for (auto& v : out.data()) v = static_cast<T>(rng.between(lo, hi));
  return out;
}

}  // namespace tpaware

#endif  // TPAWARE_RNG_HPP
