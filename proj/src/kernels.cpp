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

#include "tpaware/kernels.hpp"

#include <omp.h>

#include <stdexcept>
#include <string>
#include <vector>

namespace tpaware::kernels {

namespace {

constexpr std::size_t kColumnTile = 256;

template <typename T>
void check_gemm_shapes(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("gemm: inner dimensions differ (" + std::to_string(a.cols()) + " vs " +
                                std::to_string(b.rows()) + ")");
  }
}

void check_dequant_shapes(const QuantizedMatrix& q, std::span<const std::int32_t> rows, std::size_t out_rows,
                          std::size_t out_cols) {
  if (out_rows != rows.size() || out_cols != q.cols()) {
    throw std::invalid_argument("dequantize_rows: output shape mismatch");
  }
}

}  // namespace

int max_threads() { return omp_get_max_threads(); }

template <typename T>
Matrix<T> gemm(const Matrix<T>& a, const Matrix<T>& b) {
  check_gemm_shapes(a, b);
  const std::size_t m = a.rows();
  const std::size_t k = a.cols();
  const std::size_t n = b.cols();
  Matrix<T> c(m, n);
  const std::size_t tiles = (n + kColumnTile - 1) / kColumnTile;
  const auto work = static_cast<std::int64_t>(m * tiles);

#pragma omp parallel
  {
    std::vector<double> acc(kColumnTile);
#pragma omp for schedule(static)
    for (std::int64_t w = 0; w < work; ++w) {
      const std::size_t i = static_cast<std::size_t>(w) / tiles;
      const std::size_t j0 = (static_cast<std::size_t>(w) % tiles) * kColumnTile;
      const std::size_t j1 = std::min(n, j0 + kColumnTile);
      std::fill(acc.begin(), acc.end(), 0.0);
      for (std::size_t p = 0; p < k; ++p) {
        const double av = static_cast<double>(a(i, p));
        const T* brow = &b(p, 0);
        for (std::size_t j = j0; j < j1; ++j) acc[j - j0] += av * static_cast<double>(brow[j]);
      }
      for (std::size_t j = j0; j < j1; ++j) c(i, j) = static_cast<T>(acc[j - j0]);
    }
  }
  return c;
}

template <typename T>
void dequantize_rows(const QuantizedMatrix& q, std::span<const std::int32_t> rows, Matrix<T>& out) {
  check_dequant_shapes(q, rows, out.rows(), out.cols());
  const std::size_t n = q.cols();
  const auto count = static_cast<std::int64_t>(rows.size());

#pragma omp parallel for schedule(static)
  for (std::int64_t t = 0; t < count; ++t) {
    const auto i = static_cast<std::size_t>(rows[t]);
    const auto g = static_cast<std::size_t>(q.g_idx[i]);
    const float* scale = &q.scales(g, 0);
    for (std::size_t j = 0; j < n; ++j) {
      const double code = static_cast<double>(q.qweight.get(i, j)) - static_cast<double>(q.zeros.get(g, j));
      out(static_cast<std::size_t>(t), j) = static_cast<T>(static_cast<double>(scale[j]) * code);
    }
  }
}

namespace reference {

template <typename T>
Matrix<T> gemm(const Matrix<T>& a, const Matrix<T>& b) {
  check_gemm_shapes(a, b);
  Matrix<T> c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double sum = 0.0;
      for (std::size_t p = 0; p < a.cols(); ++p) sum += static_cast<double>(a(i, p)) * static_cast<double>(b(p, j));
      c(i, j) = static_cast<T>(sum);
    }
  }
  return c;
}

template <typename T>
void dequantize_rows(const QuantizedMatrix& q, std::span<const std::int32_t> rows, Matrix<T>& out) {
  check_dequant_shapes(q, rows, out.rows(), out.cols());
  for (std::size_t t = 0; t < rows.size(); ++t) {
    const auto i = static_cast<std::size_t>(rows[t]);
    const auto g = static_cast<std::size_t>(q.g_idx[i]);
    for (std::size_t j = 0; j < q.cols(); ++j) {
      const double code = static_cast<double>(q.qweight.get(i, j)) - static_cast<double>(q.zeros.get(g, j));
      out(t, j) = static_cast<T>(static_cast<double>(q.scales(g, j)) * code);
    }
  }
}

template Matrix<float> gemm<float>(const Matrix<float>&, const Matrix<float>&);
template Matrix<double> gemm<double>(const Matrix<double>&, const Matrix<double>&);
template void dequantize_rows<float>(const QuantizedMatrix&, std::span<const std::int32_t>, Matrix<float>&);
template void dequantize_rows<double>(const QuantizedMatrix&, std::span<const std::int32_t>, Matrix<double>&);

}  // namespace reference

template Matrix<float> gemm<float>(const Matrix<float>&, const Matrix<float>&);
template Matrix<double> gemm<double>(const Matrix<double>&, const Matrix<double>&);
template void dequantize_rows<float>(const QuantizedMatrix&, std::span<const std::int32_t>, Matrix<float>&);
template void dequantize_rows<double>(const QuantizedMatrix&, std::span<const std::int32_t>, Matrix<double>&);

}  // namespace tpaware::kernels
