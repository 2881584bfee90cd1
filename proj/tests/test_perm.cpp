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

#include "oracles.hpp"
#include "tpaware/perm.hpp"
#include "tpaware/rng.hpp"

namespace tpaware {
namespace {

using V = std::vector<std::int32_t>;

V entries(const PermutationArray& p) { return {p.entries().begin(), p.entries().end()}; }
V entries(const GroupIndexArray& g) { return {g.entries().begin(), g.entries().end()}; }

GroupIndexArray gidx(V e, std::int32_t group_size) {
  const auto groups = num_groups_for(static_cast<std::int64_t>(e.size()), group_size);
  return GroupIndexArray(std::move(e), group_size, groups);
}

TEST(Reorder, Examples) {
  auto r = reorder(gidx({1, 0, 1, 0}, 2));
  EXPECT_EQ(entries(r.perm), (V{1, 3, 0, 2}));
  EXPECT_EQ(entries(r.g_idx_ordered), (V{0, 0, 1, 1}));

  r = reorder(gidx({0, 0, 1, 1}, 2));
  EXPECT_TRUE(r.perm.is_identity());
  EXPECT_EQ(entries(r.g_idx_ordered), (V{0, 0, 1, 1}));

  r = reorder(gidx({2, 1, 0}, 1));
  EXPECT_EQ(entries(r.perm), (V{2, 1, 0}));
  EXPECT_EQ(entries(r.g_idx_ordered), (V{0, 1, 2}));
}

TEST(Reorder, MatchesBruteForceStableSort) {
  Rng rng(404);
  for (int trial = 0; trial < 300; ++trial) {
    const auto k = rng.between(1, 256);
    const auto g = rng.between(1, k);
    const auto groups = num_groups_for(k, g);
    V keys(static_cast<std::size_t>(k));
    // Arbitrary keys, not just act-order ones: repeated and missing groups included.
    for (auto& v : keys) v = static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(groups)));
    const auto r = reorder(GroupIndexArray(keys, static_cast<std::int32_t>(g), groups));
    const V expected = testing::brute_stable_argsort(keys);
    ASSERT_EQ(entries(r.perm), expected);
    ASSERT_TRUE(r.g_idx_ordered.is_ordered());
    for (std::size_t i = 0; i < keys.size(); ++i) ASSERT_EQ(r.g_idx_ordered[i], keys[static_cast<std::size_t>(expected[i])]);
    ASSERT_EQ(r.g_idx_ordered.group_size(), g);
  }
}

TEST(Reorder, OrderedInputGivesIdentity) {
  for (std::int64_t k : {1, 7, 64, 130}) EXPECT_TRUE(reorder(group_index_naive(k, 8)).perm.is_identity());
}

TEST(Invert, Examples) {
  EXPECT_TRUE(invert(PermutationArray::identity(6)).is_identity());
  EXPECT_EQ(entries(invert(PermutationArray({1, 3, 0, 2}))), (V{2, 0, 3, 1}));
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto p = random_permutation(17, s);
    EXPECT_EQ(invert(invert(p)), p);
    EXPECT_TRUE(compose(p, invert(p)).is_identity());
  }
}

TEST(Compose, MatchesSequentialRowPermutation) {
  Rng rng(9);
  const auto m = normal_matrix(9, 3, rng);
  const auto a = random_permutation(9, 1);
  const auto b = random_permutation(9, 2);
  EXPECT_EQ(permute_rows(permute_rows(m, a), b), permute_rows(m, compose(a, b)));
  EXPECT_THROW(compose(a, PermutationArray::identity(8)), std::invalid_argument);
}

TEST(PermuteRows, Examples) {
  Rng rng(1);
  const auto m = normal_matrix(5, 4, rng);
  EXPECT_EQ(permute_rows(m, PermutationArray::identity(5)), m);
  const Matrix<int> ab{{1}, {2}};
  EXPECT_EQ(permute_rows(ab, PermutationArray({1, 0})), (Matrix<int>{{2}, {1}}));
  const auto p = random_permutation(5, 3);
  EXPECT_EQ(permute_rows(permute_rows(m, p), invert(p)), m);
  EXPECT_THROW(permute_rows(m, PermutationArray::identity(4)), std::invalid_argument);
}

TEST(PermuteCols, Examples) {
  Rng rng(2);
  const auto m = normal_matrix(3, 6, rng);
  EXPECT_EQ(permute_cols(m, PermutationArray::identity(6)), m);
  const Matrix<int> ab{{1, 2}};
  EXPECT_EQ(permute_cols(ab, PermutationArray({1, 0})), (Matrix<int>{{2, 1}}));
  const auto p = random_permutation(6, 3);
  EXPECT_EQ(permute_cols(permute_cols(m, p), invert(p)), m);
  EXPECT_THROW(permute_cols(m, PermutationArray::identity(5)), std::invalid_argument);
}

TEST(PermuteCols, CommutesWithGemm) {
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    const auto x = normal_matrix(3, 3, rng).cast<double>();
    const auto w = normal_matrix(3, 3, rng).cast<double>();
    const auto p = random_permutation(3, rng.next());
    EXPECT_EQ(permute_cols(testing::naive_matmul(x, w), p), testing::naive_matmul(x, permute_cols(w, p)));
  }
}

// Integer matrices: every product and partial sum is exact, so reassociation cannot hide a bug.
TEST(Commutation, ExactOnIntegers) {
  Rng rng(4);
  for (int t = 0; t < 50; ++t) {
    const auto m = static_cast<std::size_t>(rng.between(1, 6));
    const auto k = static_cast<std::size_t>(rng.between(1, 20));
    const auto n1 = static_cast<std::size_t>(rng.between(1, 20));
    const auto n2 = static_cast<std::size_t>(rng.between(1, 20));
    const auto x = integer_matrix<double>(m, k, -9, 9, rng);
    const auto w1 = integer_matrix<double>(k, n1, -9, 9, rng);
    const auto w2 = integer_matrix<double>(n1, n2, -9, 9, rng);
    const auto p1 = random_permutation(static_cast<std::int64_t>(k), rng.next());
    const auto p2 = random_permutation(static_cast<std::int64_t>(n1), rng.next());
    const auto xw1 = testing::naive_matmul(x, w1);
    ASSERT_EQ(testing::naive_matmul(permute_cols(x, p1), permute_rows(w1, p1)), xw1);
    ASSERT_EQ(testing::naive_matmul(testing::naive_matmul(x, permute_cols(w1, p2)), permute_rows(w2, p2)),
              testing::naive_matmul(xw1, w2));
  }
}

TEST(Commutation, FloatWithinTolerance) {
  Rng rng(5);
  for (int t = 0; t < 50; ++t) {
    const auto x = normal_matrix(4, 32, rng).cast<double>();
    const auto w1 = normal_matrix(32, 24, rng).cast<double>();
    const auto w2 = normal_matrix(24, 16, rng).cast<double>();
    const auto p1 = random_permutation(32, rng.next());
    const auto p2 = random_permutation(24, rng.next());
    const auto ref = testing::naive_matmul(testing::naive_matmul(x, w1), w2);
    const auto y1 = testing::naive_matmul(permute_cols(x, p1), permute_cols(permute_rows(w1, p1), p2));
    const auto y2 = testing::naive_matmul(y1, permute_rows(w2, p2));
    ASSERT_LE(relative_diff(y2, ref), 1e-12);
  }
}

}  // namespace
}  // namespace tpaware
