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

// Independent reference implementations used only by tests.

#ifndef TPAWARE_TESTS_ORACLES_HPP
#define TPAWARE_TESTS_ORACLES_HPP

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <utility>
#include <vector>

#include "tpaware/matrix.hpp"

namespace tpaware::testing {

/// Plain triple loop, i-j-k order, double accumulation.
template <typename A, typename B>
Matrix<double> naive_matmul(const Matrix<A>& a, const Matrix<B>& b) {
  Matrix<double> out(a.rows(), b.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += static_cast<double>(a(i, k)) * static_cast<double>(b(k, j));
      out(i, j) = s;
    }
  }
  return out;
}

/// Insertion sort of (key, index) pairs; stable by construction.
inline std::vector<std::int32_t> brute_stable_argsort(const std::vector<std::int32_t>& keys) {
  std::vector<std::int32_t> idx;
  for (std::int32_t i = 0; i < static_cast<std::int32_t>(keys.size()); ++i) {
    std::size_t pos = idx.size();
    while (pos > 0 && keys[static_cast<std::size_t>(idx[pos - 1])] > keys[static_cast<std::size_t>(i)]) --pos;
    idx.insert(idx.begin() + static_cast<std::ptrdiff_t>(pos), i);
  }
  return idx;
}

/// Number of maximal runs of equal adjacent values.
inline std::int64_t count_runs(const std::vector<std::int32_t>& v) {
  std::int64_t runs = 0;
  for (std::size_t i = 0; i < v.size(); ++i) runs += (i == 0 || v[i] != v[i - 1]) ? 1 : 0;
  return runs;
}

/// Closed-form collective byte predictions, written out independently of the runtime.
inline std::uint64_t predicted_allgather(std::uint64_t m, std::uint64_t n1, std::uint64_t elem_bytes, std::uint64_t tp) {
  return m * n1 * elem_bytes * (tp - 1);
}
inline std::uint64_t predicted_allreduce(std::uint64_t m, std::uint64_t n2, std::uint64_t elem_bytes, std::uint64_t tp) {
  return 2 * (tp - 1) * m * n2 * elem_bytes;
}

}  // namespace tpaware::testing

#endif  // TPAWARE_TESTS_ORACLES_HPP
