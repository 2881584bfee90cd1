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

// Binary checkpoint format. All integers are little-endian uint32, floats are
// little-endian IEEE-754 binary32, arrays are row-major with no padding.
//
// Matrix record:
//   "TPQM"                      4-byte magic
//   version                     = 1
//   K, N, bits, group_size, num_groups
//   flags                       bit 0: row permutation present
//                               bit 1: column permutation present
//   qweight  u32[K * W]         W = ceil(N * bits / 32); PackedCodes layout
//   zeros    u32[num_groups * W]
//   scales   f32[num_groups * N]
//   g_idx    u32[K]
//   row_perm u32[K]             if flag bit 0
//   col_perm u32[N]             if flag bit 1
//
// Prepared-weights bundle:
//   "TPQB", version = 1, variant (0 naive, 1 tp_aware), layout (0 ordered, 1 act_order)
//   W1 record  row_perm = P1; col_perm = P2 when tp_aware
//   W2 record  row_perm = P2

#ifndef TPAWARE_CHECKPOINT_HPP
#define TPAWARE_CHECKPOINT_HPP

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>

#include "tpaware/pipeline.hpp"
#include "tpaware/quant.hpp"

namespace tpaware {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CheckpointEntry {
  QuantizedMatrix matrix;
  std::optional<PermutationArray> row_perm;
  std::optional<PermutationArray> col_perm;

  bool operator==(const CheckpointEntry&) const = default;
};

void write_checkpoint(std::ostream& out, const CheckpointEntry& entry);
CheckpointEntry read_checkpoint(std::istream& in);

void write_prepared(std::ostream& out, const PreparedWeights& pw);
PreparedWeights read_prepared(std::istream& in);

void save_prepared(const std::filesystem::path& path, const PreparedWeights& pw);
PreparedWeights load_prepared(const std::filesystem::path& path);

}  // namespace tpaware

#endif  // TPAWARE_CHECKPOINT_HPP
