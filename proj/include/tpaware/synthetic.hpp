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

// Seeded problem generators shared by the CLI, tests and benchmarks.
//
// Streams under one seed: 1 and 2 are the act-order shuffles (see
// derive_act_order), 3 is W1, 4 is W2, 5 is X.

#ifndef TPAWARE_SYNTHETIC_HPP
#define TPAWARE_SYNTHETIC_HPP

#include <cstdint>

#include "tpaware/matrix.hpp"
#include "tpaware/quant.hpp"
#include "tpaware/rng.hpp"

namespace tpaware {

inline constexpr std::uint64_t kStreamW1 = 3;
inline constexpr std::uint64_t kStreamW2 = 4;
inline constexpr std::uint64_t kStreamX = 5;

struct DenseProblem {
  Matrix<float> w1;  // K1 x N1
  Matrix<float> w2;  // N1 x N2
};

/// Standard-normal W1 and W2.
DenseProblem normal_weights(std::size_t k1, std::size_t n1, std::size_t n2, std::uint64_t seed);

/// Standard-normal activations, M x K1. Row i is the same for every m > i.
Matrix<float> normal_activations(std::size_t m, std::size_t k1, std::uint64_t seed);

/// Integer weights that quantize losslessly under the act-order groups
/// g(r) = phi[r] / group_size.
///
/// Every (group, column) cell draws a zero point z in [0, 2^bits - 1] and
/// fills its rows with integers from [-z, 2^bits - 1 - z], writing both ends
/// at least once. The quantizer then picks scale 1 and zero z for the cell,
/// so dequantization reproduces the weights exactly. Every group must hold at
/// least two rows.
Matrix<float> lossless_weights(std::size_t rows, std::size_t cols, int group_size, int bits,
                               const PermutationArray& phi, Rng& rng);

/// lossless_weights for both layers with the shuffles of derive_act_order(k1, n1, seed).
DenseProblem lossless_problem(std::size_t k1, std::size_t n1, std::size_t n2, int group_size, int bits,
                              std::uint64_t seed);

}  // namespace tpaware

#endif  // TPAWARE_SYNTHETIC_HPP
