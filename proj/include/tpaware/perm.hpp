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

#ifndef TPAWARE_PERM_HPP
#define TPAWARE_PERM_HPP

#include <stdexcept>
#include <string>

#include "tpaware/matrix.hpp"
#include "tpaware/quant.hpp"

namespace tpaware {

struct Reordered {
  PermutationArray perm;           // stable argsort of the input
  GroupIndexArray g_idx_ordered;   // input gathered through perm
};

/// Sorts a group index array into contiguous groups.
///
/// perm is the stable argsort of `g_idx` (equal group ids keep ascending row
/// order) and g_idx_ordered[i] = g_idx[perm[i]]. Quantized rows reordered by
/// perm can then reuse each group's metadata for a whole run of rows.
Reordered reorder(const GroupIndexArray& g_idx);

/// q with q[p[i]] = i.
PermutationArray invert(const PermutationArray& p);

/// (a then b): out[i] = a[b[i]], i.e. permute_rows(permute_rows(M, a), b) == permute_rows(M, compose(a, b)).
PermutationArray compose(const PermutationArray& a, const PermutationArray& b);

/// out[i][j] = m[p[i]][j].
template <typename T>
Matrix<T> permute_rows(const Matrix<T>& m, const PermutationArray& p) {
  if (p.size() != m.rows()) {
    throw std::invalid_argument("permute_rows: permutation length " + std::to_string(p.size()) +
                                " != row count " + std::to_string(m.rows()));
  }
  Matrix<T> out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto src = m.row(static_cast<std::size_t>(p[i]));
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

/// out[i][j] = m[i][p[j]].
template <typename T>
Matrix<T> permute_cols(const Matrix<T>& m, const PermutationArray& p) {
  if (p.size() != m.cols()) {
    throw std::invalid_argument("permute_cols: permutation length " + std::to_string(p.size()) +
                                " != column count " + std::to_string(m.cols()));
  }
  Matrix<T> out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto src = m.row(i);
    auto dst = out.row(i);
    for (std::size_t j = 0; j < m.cols(); ++j) dst[j] = src[static_cast<std::size_t>(p[j])];
  }
  return out;
}

}  // namespace tpaware

#endif  // TPAWARE_PERM_HPP
