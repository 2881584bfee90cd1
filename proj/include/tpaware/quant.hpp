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

// Grouped (GPTQ-layout) weight quantization.
//
// A K x N weight matrix is split into groups of input channels (rows). Every
// (group, column) pair owns one scale and one integer zero point, and the
// group index array maps each row to its group. With act-order quantization
// the group index array is a shuffled version of the contiguous layout, which
// forces the dequantizer to switch metadata far more often.

#ifndef TPAWARE_QUANT_HPP
#define TPAWARE_QUANT_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "tpaware/matrix.hpp"

namespace tpaware {

/// Bijective index map over [0, size).
class PermutationArray {
 public:
  PermutationArray() = default;
  /// Validates that `entries` is a bijection on [0, entries.size()).
  explicit PermutationArray(std::vector<std::int32_t> entries);

  static PermutationArray identity(std::size_t n);

  std::size_t size() const noexcept { return entries_.size(); }
  std::int32_t operator[](std::size_t i) const noexcept { return entries_[i]; }
  std::span<const std::int32_t> entries() const noexcept { return entries_; }
  bool is_identity() const noexcept;

  bool operator==(const PermutationArray&) const = default;

 private:
  std::vector<std::int32_t> entries_;
};

bool is_bijection(std::span<const std::int32_t> entries);

/// Row -> metadata group map.
///
/// Full arrays cover all K rows and hold each group id g exactly
/// min(G, K - g*G) times. Row shards of a full array keep the parent's
/// group count so they still address the parent's metadata.
class GroupIndexArray {
 public:
  GroupIndexArray() = default;
  /// Validates entries against [0, num_groups) only.
  GroupIndexArray(std::vector<std::int32_t> entries, std::int32_t group_size, std::int32_t num_groups);

  std::size_t size() const noexcept { return entries_.size(); }
  std::int32_t operator[](std::size_t i) const noexcept { return entries_[i]; }
  std::span<const std::int32_t> entries() const noexcept { return entries_; }
  std::int32_t group_size() const noexcept { return group_size_; }
  std::int32_t num_groups() const noexcept { return num_groups_; }

  /// Nondecreasing entries.
  bool is_ordered() const noexcept;
  /// Every group id occupies one contiguous run of rows.
  bool is_contiguous() const noexcept;
  /// Multiset equals that of the contiguous layout for (size(), group_size()).
  bool is_complete() const;

  GroupIndexArray slice(std::size_t begin, std::size_t end) const;

  bool operator==(const GroupIndexArray&) const = default;

 private:
  std::vector<std::int32_t> entries_;
  std::int32_t group_size_ = 1;
  std::int32_t num_groups_ = 0;
};

std::int32_t num_groups_for(std::int64_t rows, std::int64_t group_size);

/// entries[i] = i / G.
GroupIndexArray group_index_naive(std::int64_t rows, std::int64_t group_size);

/// Seeded uniform permutation: Fisher-Yates (descending i, j = below(i + 1))
/// over Rng(seed), starting from the identity.
PermutationArray random_permutation(std::int64_t size, std::uint64_t seed);

/// entries[i] = phi[i] / G.
GroupIndexArray group_index_actorder(std::int64_t rows, std::int64_t group_size, const PermutationArray& phi);

/// Row-major matrix of b-bit unsigned codes.
///
/// Each row starts on a fresh 32-bit word and is a little-endian bit stream:
/// element j occupies stream bits [j*b, (j+1)*b), stream bit t is bit (t % 32)
/// of the row's word t / 32. Codes may straddle two words when b = 3.
class PackedCodes {
 public:
  PackedCodes() = default;
  PackedCodes(std::size_t rows, std::size_t cols, int bits);

  static std::size_t words_per_row(std::size_t cols, int bits) noexcept { return (cols * bits + 31) / 32; }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  int bits() const noexcept { return bits_; }
  std::size_t words_per_row() const noexcept { return words_per_row_; }

  std::uint32_t get(std::size_t i, std::size_t j) const noexcept {
    const std::size_t bit = j * static_cast<std::size_t>(bits_);
    const std::uint32_t* row = words_.data() + i * words_per_row_;
    const std::size_t w = bit / 32;
    const unsigned shift = bit % 32;
    std::uint64_t v = row[w] >> shift;
    if (shift + bits_ > 32) v |= static_cast<std::uint64_t>(row[w + 1]) << (32 - shift);
    return static_cast<std::uint32_t>(v) & mask_;
  }
  void set(std::size_t i, std::size_t j, std::uint32_t value);

  std::span<const std::uint32_t> words() const noexcept { return words_; }
  std::span<std::uint32_t> words() noexcept { return words_; }

  PackedCodes slice_rows(std::size_t begin, std::size_t end) const;
  PackedCodes slice_cols(std::size_t begin, std::size_t end) const;
  /// out.get(i, j) = get(i, perm[j]).
  PackedCodes permute_cols(const PermutationArray& perm) const;
  /// out.get(i, j) = get(perm[i], j).
  PackedCodes permute_rows(const PermutationArray& perm) const;

  bool operator==(const PackedCodes&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  int bits_ = 0;
  std::uint32_t mask_ = 0;
  std::size_t words_per_row_ = 0;
  std::vector<std::uint32_t> words_;
};

/// Quantized K x N weight: dequantized(i, j) = scales[g][j] * (q(i, j) - zeros[g][j]) with g = g_idx[i].
struct QuantizedMatrix {
  int bits = 4;
  PackedCodes qweight;      // K x N
  PackedCodes zeros;        // num_groups x N
  Matrix<float> scales;     // num_groups x N
  GroupIndexArray g_idx;    // K entries

  std::size_t rows() const noexcept { return qweight.rows(); }
  std::size_t cols() const noexcept { return qweight.cols(); }
  std::int32_t group_size() const noexcept { return g_idx.group_size(); }
  std::int32_t num_groups() const noexcept { return g_idx.num_groups(); }

  /// Throws std::invalid_argument describing the first violated invariant.
  void validate() const;

  /// Column shard; metadata columns follow.
  QuantizedMatrix slice_cols(std::size_t begin, std::size_t end) const;
  /// Row shard; g_idx is sliced, metadata stays whole.
  QuantizedMatrix slice_rows(std::size_t begin, std::size_t end) const;
  /// Column permutation of codes, zeros and scales together.
  QuantizedMatrix permute_cols(const PermutationArray& perm) const;

  bool operator==(const QuantizedMatrix&) const = default;
};

bool is_supported_bit_width(int bits) noexcept;

/// Round-to-nearest min/max quantizer over the rows of each group.
///
/// Per (group, column): lo = min(min, 0), hi = max(max, 0),
/// scale = (hi - lo) / (2^b - 1) rounded to float, zero = round(-lo / scale),
/// q = clamp(round(w / scale) + zero, 0, 2^b - 1). A constant nonzero group
/// c uses scale = |c| so it reconstructs exactly; an all-zero group uses
/// scale = FLT_EPSILON.
QuantizedMatrix quantize_grouped(const Matrix<float>& weights, int group_size, int bits,
                                 const GroupIndexArray& g_idx);

/// Metadata switches when visiting `rows` in order: 1 for the first row plus
/// one per change of group id. Contiguous reuse is free.
std::int64_t count_metadata_loads(const GroupIndexArray& g_idx, std::span<const std::int32_t> rows);
std::int64_t count_metadata_loads(const GroupIndexArray& g_idx);

template <typename T>
struct Dequantized {
  Matrix<T> values;
  std::int64_t metadata_loads = 0;
};

/// Dequantizes all rows, or `rows` in the given order.
template <typename T = double>
Dequantized<T> dequantize(const QuantizedMatrix& q,
                          std::optional<std::span<const std::int32_t>> rows = std::nullopt);

extern template Dequantized<float> dequantize<float>(const QuantizedMatrix&,
                                                     std::optional<std::span<const std::int32_t>>);
extern template Dequantized<double> dequantize<double>(const QuantizedMatrix&,
                                                       std::optional<std::span<const std::int32_t>>);

}  // namespace tpaware

#endif  // TPAWARE_QUANT_HPP
