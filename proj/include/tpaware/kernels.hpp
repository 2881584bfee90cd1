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

// Compute kernels. The top-level functions are OpenMP-parallel; the
// `reference` namespace holds plain serial loops kept for testing and
// benchmarking. Both accumulate every output element in double, over k in
// ascending order, so the two produce bit-identical results.

#ifndef TPAWARE_KERNELS_HPP
#define TPAWARE_KERNELS_HPP

#include <cstdint>
#include <span>

#include "tpaware/matrix.hpp"
#include "tpaware/quant.hpp"

namespace tpaware::kernels {

/// C = A * B.
template <typename T>
Matrix<T> gemm(const Matrix<T>& a, const Matrix<T>& b);

/// out.row(t) = dequantized row rows[t] of q. `out` must be rows.size() x q.cols().
template <typename T>
void dequantize_rows(const QuantizedMatrix& q, std::span<const std::int32_t> rows, Matrix<T>& out);

int max_threads();

namespace reference {

template <typename T>
Matrix<T> gemm(const Matrix<T>& a, const Matrix<T>& b);

template <typename T>
void dequantize_rows(const QuantizedMatrix& q, std::span<const std::int32_t> rows, Matrix<T>& out);

}  // namespace reference

}  // namespace tpaware::kernels

#endif  // TPAWARE_KERNELS_HPP
