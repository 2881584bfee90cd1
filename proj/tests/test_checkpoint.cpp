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

#include <gtest/gtest.h>

#include <sstream>

#include "tpaware/checkpoint.hpp"
#include "tpaware/rng.hpp"
#include "tpaware/synthetic.hpp"

namespace tpaware {
namespace {

// K=2, N=3, b=4, G=2, codes [[1,2,3],[4,5,6]], zeros [7,8,9], scales [0.5,1,2], row perm [1,0].
QuantizedMatrix golden_matrix() {
  QuantizedMatrix q;
  q.bits = 4;
  q.qweight = PackedCodes(2, 3, 4);
  q.zeros = PackedCodes(1, 3, 4);
  for (std::uint32_t j = 0; j < 3; ++j) {
    q.qweight.set(0, j, 1 + j);
    q.qweight.set(1, j, 4 + j);
    q.zeros.set(0, j, 7 + j);
  }
  q.scales = Matrix<float>{{0.5f, 1.0f, 2.0f}};
  q.g_idx = GroupIndexArray({0, 0}, 2, 1);
  return q;
}

const std::vector<unsigned char> kGolden{
    'T',  'P',  'Q',  'M',                      // magic
    0x01, 0x00, 0x00, 0x00,                     // version
    0x02, 0x00, 0x00, 0x00,                     // K
    0x03, 0x00, 0x00, 0x00,                     // N
    0x04, 0x00, 0x00, 0x00,                     // bits
    0x02, 0x00, 0x00, 0x00,                     // group size
    0x01, 0x00, 0x00, 0x00,                     // groups
    0x01, 0x00, 0x00, 0x00,                     // flags: row perm
    0x21, 0x03, 0x00, 0x00,                     // qweight row 0
    0x54, 0x06, 0x00, 0x00,                     // qweight row 1
    0x87, 0x09, 0x00, 0x00,                     // zeros
    0x00, 0x00, 0x00, 0x3f,                     // 0.5f
    0x00, 0x00, 0x80, 0x3f,                     // 1.0f
    0x00, 0x00, 0x00, 0x40,                     // 2.0f
    0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00,  // g_idx
    0x01, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00,  // row perm
};

std::string golden_string() { return std::string(kGolden.begin(), kGolden.end()); }

TEST(Checkpoint, GoldenBytes) {
  std::ostringstream out;
  write_checkpoint(out, {golden_matrix(), PermutationArray({1, 0}), std::nullopt});
  EXPECT_EQ(out.str(), golden_string());
}

TEST(Checkpoint, ReadGolden) {
  std::istringstream in(golden_string());
  const CheckpointEntry e = read_checkpoint(in);
  EXPECT_EQ(e.matrix, golden_matrix());
  ASSERT_TRUE(e.row_perm.has_value());
  EXPECT_EQ(*e.row_perm, PermutationArray({1, 0}));
  EXPECT_FALSE(e.col_perm.has_value());
}

TEST(Checkpoint, RejectsCorruption) {
  auto expect_error = [](std::string bytes) {
    std::istringstream in(bytes);
    EXPECT_THROW(read_checkpoint(in), CheckpointError);
  };
  std::string s = golden_string();
  expect_error(s.substr(0, s.size() - 1));  // truncated
  std::string bad = s;
  bad[0] = 'X';
  expect_error(bad);  // magic
  bad = s;
  bad[4] = 2;
  expect_error(bad);  // version
  bad = s;
  bad[16] = 5;
  expect_error(bad);  // bit width
  bad = s;
  bad[24] = 2;
  expect_error(bad);  // group count
  bad = s;
  bad[28] = 4;
  expect_error(bad);  // unknown flag
  bad = s;
  bad[47] = 0;
  expect_error(bad);  // zero scale
  bad = s;
  bad[s.size() - 8] = 0;
  expect_error(bad);  // row perm [0, 0]
  bad = s;
  bad[56] = 1;
  expect_error(bad);  // g_idx out of range
}

TEST(Checkpoint, PreparedRoundTrip) {
  const DenseProblem dense = normal_weights(24, 16, 8, 5);
  for (const Variant v : {Variant::naive, Variant::tp_aware}) {
    for (const GroupLayout l : {GroupLayout::ordered, GroupLayout::act_order}) {
      for (const int bits : {2, 3, 4, 8}) {
        const PreparedWeights pw = prepare_weights(dense.w1, dense.w2, {4, bits, 5, v, l});
        std::stringstream buf;
        write_prepared(buf, pw);
        EXPECT_EQ(read_prepared(buf), pw);
      }
    }
  }
}

TEST(Checkpoint, BundleConsistencyChecks) {
  const DenseProblem dense = normal_weights(8, 8, 8, 1);
  PreparedWeights pw = prepare_weights(dense.w1, dense.w2, {2, 4, 1, Variant::tp_aware, GroupLayout::ordered});
  std::stringstream buf;
  write_prepared(buf, pw);
  std::string bytes = buf.str();
  bytes[8] = 0;  // claim naive while W1 carries P2 columns
  std::istringstream in(bytes);
  EXPECT_THROW(read_prepared(in), CheckpointError);
}

TEST(Checkpoint, FileRoundTrip) {
  const DenseProblem dense = normal_weights(16, 8, 8, 2);
  const PreparedWeights pw = prepare_weights(dense.w1, dense.w2, {4, 4, 2, Variant::naive, GroupLayout::ordered});
  const auto path = std::filesystem::temp_directory_path() / "tpaware_checkpoint_test.bin";
  save_prepared(path, pw);
  EXPECT_EQ(load_prepared(path), pw);
  std::filesystem::remove(path);
  EXPECT_THROW(load_prepared(path), CheckpointError);
}

}  // namespace
}  // namespace tpaware
