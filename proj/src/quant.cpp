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

#include "tpaware/quant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "tpaware/kernels.hpp"
#include "tpaware/rng.hpp"

namespace tpaware {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace

// ---------------------------------------------------------------------------
// PermutationArray

bool is_bijection(std::span<const std::int32_t> entries) {
  std::vector<bool> seen(entries.size(), false);
  for (const std::int32_t e : entries) {
    if (e < 0 || static_cast<std::size_t>(e) >= entries.size() || seen[e]) return false;
    seen[e] = true;
  }
  return true;
}

PermutationArray::PermutationArray(std::vector<std::int32_t> entries) : entries_(std::move(entries)) {
  require(is_bijection(entries_), "PermutationArray: entries are not a bijection on [0, " +
                                      std::to_string(entries_.size()) + ")");
}

PermutationArray PermutationArray::identity(std::size_t n) {
  std::vector<std::int32_t> e(n);
  std::iota(e.begin(), e.end(), 0);
  return PermutationArray(std::move(e));
}

bool PermutationArray::is_identity() const noexcept {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i] != static_cast<std::int32_t>(i)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// GroupIndexArray

std::int32_t num_groups_for(std::int64_t rows, std::int64_t group_size) {
  require(rows >= 1, "group index: row count must be positive, got " + std::to_string(rows));
  require(group_size >= 1, "group index: group size must be positive, got " + std::to_string(group_size));
  require(rows <= std::numeric_limits<std::int32_t>::max(), "group index: row count too large");
  return static_cast<std::int32_t>((rows + group_size - 1) / group_size);
}

GroupIndexArray::GroupIndexArray(std::vector<std::int32_t> entries, std::int32_t group_size,
                                 std::int32_t num_groups)
    : entries_(std::move(entries)), group_size_(group_size), num_groups_(num_groups) {
  require(group_size_ >= 1, "GroupIndexArray: group size must be positive");
  require(num_groups_ >= 0, "GroupIndexArray: negative group count");
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    require(entries_[i] >= 0 && entries_[i] < num_groups_,
            "GroupIndexArray: entry " + std::to_string(i) + " = " + std::to_string(entries_[i]) +
                " outside [0, " + std::to_string(num_groups_) + ")");
  }
}

bool GroupIndexArray::is_ordered() const noexcept { return std::is_sorted(entries_.begin(), entries_.end()); }

bool GroupIndexArray::is_contiguous() const noexcept {
  std::vector<bool> closed(static_cast<std::size_t>(num_groups_), false);
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (i > 0 && entries_[i] != entries_[i - 1]) closed[entries_[i - 1]] = true;
    if (closed[entries_[i]]) return false;
  }
  return true;
}

bool GroupIndexArray::is_complete() const {
  if (entries_.empty()) return false;
  const auto k = static_cast<std::int64_t>(entries_.size());
  if (num_groups_ != num_groups_for(k, group_size_)) return false;
  std::vector<std::int64_t> counts(static_cast<std::size_t>(num_groups_), 0);
  for (const std::int32_t e : entries_) ++counts[e];
  for (std::int32_t g = 0; g < num_groups_; ++g) {
    const std::int64_t expected = std::min<std::int64_t>(group_size_, k - static_cast<std::int64_t>(g) * group_size_);
    if (counts[g] != expected) return false;
  }
  return true;
}

GroupIndexArray GroupIndexArray::slice(std::size_t begin, std::size_t end) const {
  require(begin <= end && end <= entries_.size(), "GroupIndexArray::slice: range out of bounds");
  return GroupIndexArray(std::vector<std::int32_t>(entries_.begin() + begin, entries_.begin() + end), group_size_,
                         num_groups_);
}

GroupIndexArray group_index_naive(std::int64_t rows, std::int64_t group_size) {
  const std::int32_t groups = num_groups_for(rows, group_size);
  std::vector<std::int32_t> e(static_cast<std::size_t>(rows));
  for (std::int64_t i = 0; i < rows; ++i) e[i] = static_cast<std::int32_t>(i / group_size);
  return GroupIndexArray(std::move(e), static_cast<std::int32_t>(group_size), groups);
}

PermutationArray random_permutation(std::int64_t size, std::uint64_t seed) {
  require(size >= 1, "random_permutation: size must be positive, got " + std::to_string(size));
  require(size <= std::numeric_limits<std::int32_t>::max(), "random_permutation: size too large");
  std::vector<std::int32_t> e(static_cast<std::size_t>(size));
  std::iota(e.begin(), e.end(), 0);
  Rng rng(seed);
  for (std::int64_t i = size - 1; i > 0; --i) {
    const auto j = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(i) + 1));
    std::swap(e[i], e[j]);
  }
  return PermutationArray(std::move(e));
}

GroupIndexArray group_index_actorder(std::int64_t rows, std::int64_t group_size, const PermutationArray& phi) {
  const std::int32_t groups = num_groups_for(rows, group_size);
  require(static_cast<std::int64_t>(phi.size()) == rows, "group_index_actorder: permutation length " +
                                                             std::to_string(phi.size()) + " != row count " +
                                                             std::to_string(rows));
  std::vector<std::int32_t> e(static_cast<std::size_t>(rows));
  for (std::int64_t i = 0; i < rows; ++i) e[i] = static_cast<std::int32_t>(phi[i] / group_size);
  return GroupIndexArray(std::move(e), static_cast<std::int32_t>(group_size), groups);
}

// ---------------------------------------------------------------------------
// PackedCodes

bool is_supported_bit_width(int bits) noexcept { return bits == 2 || bits == 3 || bits == 4 || bits == 8; }

PackedCodes::PackedCodes(std::size_t rows, std::size_t cols, int bits)
    : rows_(rows),
      cols_(cols),
      bits_(bits),
      mask_(bits >= 32 ? 0xffffffffu : ((1u << bits) - 1u)),
      words_per_row_(words_per_row(cols, bits)),
      words_(rows * words_per_row_, 0u) {
  require(is_supported_bit_width(bits), "PackedCodes: unsupported bit width " + std::to_string(bits));
}

void PackedCodes::set(std::size_t i, std::size_t j, std::uint32_t value) {
  require(value <= mask_, "PackedCodes::set: code " + std::to_string(value) + " does not fit in " +
                              std::to_string(bits_) + " bits");
  const std::size_t bit = j * static_cast<std::size_t>(bits_);
  std::uint32_t* row = words_.data() + i * words_per_row_;
  const std::size_t w = bit / 32;
  const unsigned shift = bit % 32;
  const std::uint64_t v = static_cast<std::uint64_t>(value) << shift;
  const std::uint64_t m = static_cast<std::uint64_t>(mask_) << shift;
  row[w] = static_cast<std::uint32_t>((row[w] & ~m) | v);
  if (shift + bits_ > 32) {
    row[w + 1] = static_cast<std::uint32_t>((row[w + 1] & ~(m >> 32)) | (v >> 32));
  }
}

PackedCodes PackedCodes::slice_rows(std::size_t begin, std::size_t end) const {
  require(begin <= end && end <= rows_, "PackedCodes::slice_rows: range out of bounds");
  PackedCodes out(end - begin, cols_, bits_);
  std::copy(words_.begin() + begin * words_per_row_, words_.begin() + end * words_per_row_, out.words_.begin());
  return out;
}

PackedCodes PackedCodes::slice_cols(std::size_t begin, std::size_t end) const {
  require(begin <= end && end <= cols_, "PackedCodes::slice_cols: range out of bounds");
  PackedCodes out(rows_, end - begin, bits_);
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t j = begin; j < end; ++j) out.set(i, j - begin, get(i, j));
  }
  return out;
}

PackedCodes PackedCodes::permute_cols(const PermutationArray& perm) const {
  require(perm.size() == cols_, "PackedCodes::permute_cols: permutation length mismatch");
  PackedCodes out(rows_, cols_, bits_);
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t j = 0; j < cols_; ++j) out.set(i, j, get(i, static_cast<std::size_t>(perm[j])));
  }
  return out;
}

PackedCodes PackedCodes::permute_rows(const PermutationArray& perm) const {
  require(perm.size() == rows_, "PackedCodes::permute_rows: permutation length mismatch");
  PackedCodes out(rows_, cols_, bits_);
  for (std::size_t i = 0; i < rows_; ++i) {
    const auto src = static_cast<std::size_t>(perm[i]);
    std::copy(words_.begin() + src * words_per_row_, words_.begin() + (src + 1) * words_per_row_,
              out.words_.begin() + i * words_per_row_);
  }
  return out;
}

// ---------------------------------------------------------------------------
// QuantizedMatrix

void QuantizedMatrix::validate() const {
  require(is_supported_bit_width(bits), "QuantizedMatrix: unsupported bit width " + std::to_string(bits));
  require(qweight.bits() == bits && zeros.bits() == bits, "QuantizedMatrix: code width mismatch");
  require(g_idx.size() == qweight.rows(), "QuantizedMatrix: g_idx length != row count");
  const auto groups = static_cast<std::size_t>(g_idx.num_groups());
  require(zeros.rows() == groups && scales.rows() == groups, "QuantizedMatrix: metadata rows != group count");
  require(zeros.cols() == qweight.cols() && scales.cols() == qweight.cols(),
          "QuantizedMatrix: metadata columns != weight columns");
  for (const float s : scales.data()) {
    require(std::isfinite(s) && s > 0.0f, "QuantizedMatrix: scales must be finite and positive");
  }
}

QuantizedMatrix QuantizedMatrix::slice_cols(std::size_t begin, std::size_t end) const {
  return QuantizedMatrix{bits, qweight.slice_cols(begin, end), zeros.slice_cols(begin, end),
                         scales.slice_cols(begin, end), g_idx};
}

QuantizedMatrix QuantizedMatrix::slice_rows(std::size_t begin, std::size_t end) const {
  return QuantizedMatrix{bits, qweight.slice_rows(begin, end), zeros, scales, g_idx.slice(begin, end)};
}

QuantizedMatrix QuantizedMatrix::permute_cols(const PermutationArray& perm) const {
  require(perm.size() == cols(), "QuantizedMatrix::permute_cols: permutation length mismatch");
  Matrix<float> s(scales.rows(), scales.cols());
  for (std::size_t g = 0; g < scales.rows(); ++g) {
    for (std::size_t j = 0; j < scales.cols(); ++j) s(g, j) = scales(g, static_cast<std::size_t>(perm[j]));
  }
  return QuantizedMatrix{bits, qweight.permute_cols(perm), zeros.permute_cols(perm), std::move(s), g_idx};
}

QuantizedMatrix quantize_grouped(const Matrix<float>& weights, int group_size, int bits,
                                 const GroupIndexArray& g_idx) {
  require(is_supported_bit_width(bits), "quantize_grouped: unsupported bit width " + std::to_string(bits));
  require(weights.rows() >= 1 && weights.cols() >= 1, "quantize_grouped: empty weight matrix");
  require(g_idx.size() == weights.rows(), "quantize_grouped: g_idx length " + std::to_string(g_idx.size()) +
                                              " != row count " + std::to_string(weights.rows()));
  require(g_idx.group_size() == group_size, "quantize_grouped: g_idx group size differs from requested");
  require(g_idx.is_complete(), "quantize_grouped: g_idx does not assign every group its full row count");
  for (const float w : weights.data()) require(std::isfinite(w), "quantize_grouped: non-finite weight");

  const std::size_t k = weights.rows();
  const std::size_t n = weights.cols();
  const auto groups = static_cast<std::size_t>(g_idx.num_groups());
  const double maxq = static_cast<double>((1u << bits) - 1u);

  Matrix<float> lo(groups, n, std::numeric_limits<float>::infinity());
  Matrix<float> hi(groups, n, -std::numeric_limits<float>::infinity());
  for (std::size_t i = 0; i < k; ++i) {
    const auto g = static_cast<std::size_t>(g_idx[i]);
    for (std::size_t j = 0; j < n; ++j) {
      lo(g, j) = std::min(lo(g, j), weights(i, j));
      hi(g, j) = std::max(hi(g, j), weights(i, j));
    }
  }

  QuantizedMatrix q{bits, PackedCodes(k, n, bits), PackedCodes(groups, n, bits), Matrix<float>(groups, n), g_idx};
  for (std::size_t g = 0; g < groups; ++g) {
    for (std::size_t j = 0; j < n; ++j) {
      const double mn = lo(g, j);
      const double mx = hi(g, j);
      float scale;
      std::uint32_t zero;
      if (mn == mx && mn != 0.0) {
        scale = static_cast<float>(std::abs(mn));
        zero = mn > 0.0 ? 0u : 1u;
      } else {
        const double range = std::max(mx, 0.0) - std::min(mn, 0.0);
        scale = static_cast<float>(range / maxq);
        if (!(scale > 0.0f)) scale = std::numeric_limits<float>::epsilon();
        const double z = std::nearbyint(-std::min(mn, 0.0) / static_cast<double>(scale));
        zero = static_cast<std::uint32_t>(std::clamp(z, 0.0, maxq));
      }
      q.scales(g, j) = scale;
      q.zeros.set(g, j, zero);
    }
  }
  for (std::size_t i = 0; i < k; ++i) {
    const auto g = static_cast<std::size_t>(g_idx[i]);
    for (std::size_t j = 0; j < n; ++j) {
      const double code = std::nearbyint(static_cast<double>(weights(i, j)) / static_cast<double>(q.scales(g, j))) +
                          static_cast<double>(q.zeros.get(g, j));
      q.qweight.set(i, j, static_cast<std::uint32_t>(std::clamp(code, 0.0, maxq)));
    }
  }
  return q;
}

// ---------------------------------------------------------------------------
// Dequantization

std::int64_t count_metadata_loads(const GroupIndexArray& g_idx, std::span<const std::int32_t> rows) {
  std::int64_t loads = 0;
  for (std::size_t t = 0; t < rows.size(); ++t) {
    if (t == 0 || g_idx[rows[t]] != g_idx[rows[t - 1]]) ++loads;
  }
  return loads;
}

std::int64_t count_metadata_loads(const GroupIndexArray& g_idx) {
  std::int64_t loads = 0;
  for (std::size_t i = 0; i < g_idx.size(); ++i) {
    if (i == 0 || g_idx[i] != g_idx[i - 1]) ++loads;
  }
  return loads;
}

template <typename T>
Dequantized<T> dequantize(const QuantizedMatrix& q, std::optional<std::span<const std::int32_t>> rows) {
  std::vector<std::int32_t> all;
  std::span<const std::int32_t> order;
  if (rows) {
    for (const std::int32_t r : *rows) {
      require(r >= 0 && static_cast<std::size_t>(r) < q.rows(),
              "dequantize: row " + std::to_string(r) + " out of bounds for " + std::to_string(q.rows()) + " rows");
    }
    order = *rows;
  } else {
    all.resize(q.rows());
    std::iota(all.begin(), all.end(), 0);
    order = all;
  }
  Dequantized<T> out{Matrix<T>(order.size(), q.cols()), count_metadata_loads(q.g_idx, order)};
  kernels::dequantize_rows(q, order, out.values);
  return out;
}

template Dequantized<float> dequantize<float>(const QuantizedMatrix&, std::optional<std::span<const std::int32_t>>);
template Dequantized<double> dequantize<double>(const QuantizedMatrix&, std::optional<std::span<const std::int32_t>>);

}  // namespace tpaware
