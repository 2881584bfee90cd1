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

#include "oracles.hpp"
#include "tpaware/checkpoint.hpp"
#include "tpaware/perm.hpp"
#include "tpaware/pipeline.hpp"
#include "tpaware/synthetic.hpp"

namespace tpaware {
namespace {

PrepareOptions opts(int g, int b, std::uint64_t seed, Variant v, GroupLayout l = GroupLayout::ordered) {
  return {g, b, seed, v, l};
}

std::string record_bytes(const QuantizedMatrix& q) {
  std::ostringstream out;
  write_checkpoint(out, {q, std::nullopt, std::nullopt});
  return out.str();
}

TEST(Prepare, IdentityShufflesGiveIdenticalVariants) {
  const DenseProblem d = normal_weights(16, 8, 8, 1);
  const ActOrder identity{PermutationArray::identity(16), PermutationArray::identity(8)};
  const auto naive = prepare_weights(d.w1, d.w2, identity, opts(4, 4, 1, Variant::naive));
  const auto aware = prepare_weights(d.w1, d.w2, identity, opts(4, 4, 1, Variant::tp_aware));
  EXPECT_TRUE(naive.p1.is_identity());
  EXPECT_TRUE(naive.p2.is_identity());
  EXPECT_EQ(record_bytes(naive.w1), record_bytes(aware.w1));
  EXPECT_EQ(record_bytes(naive.w2), record_bytes(aware.w2));
}

TEST(Prepare, TpAwareW1IsColumnPermutedNaiveW1) {
  const DenseProblem d = normal_weights(8, 8, 8, 3);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto naive = prepare_weights(d.w1, d.w2, opts(2, 4, seed, Variant::naive));
    const auto aware = prepare_weights(d.w1, d.w2, opts(2, 4, seed, Variant::tp_aware));
    EXPECT_EQ(dequantize<double>(aware.w1).values, permute_cols(dequantize<double>(naive.w1).values, naive.p2));
    EXPECT_EQ(aware.w1, naive.w1.permute_cols(naive.p2));
    EXPECT_EQ(aware.w2, naive.w2);
    EXPECT_EQ(aware.p1, naive.p1);
    EXPECT_EQ(aware.p2, naive.p2);
  }
}

TEST(Prepare, StoredGidxIsOrderedWithMinimalRuns) {
  const DenseProblem d = normal_weights(64, 32, 16, 4);
  for (const Variant v : {Variant::naive, Variant::tp_aware}) {
    const auto pw = prepare_weights(d.w1, d.w2, opts(8, 4, 4, v));
    EXPECT_TRUE(pw.w1.g_idx.is_ordered());
    EXPECT_TRUE(pw.w2.g_idx.is_ordered());
    EXPECT_EQ(count_metadata_loads(pw.w1.g_idx), 8);
    EXPECT_EQ(count_metadata_loads(pw.w2.g_idx), 4);
  }
  const auto act = prepare_weights(d.w1, d.w2, opts(8, 4, 4, Variant::naive, GroupLayout::act_order));
  EXPECT_TRUE(act.p1.is_identity());
  EXPECT_FALSE(act.w1.g_idx.is_ordered());
}

TEST(Prepare, PermutationsComeFromReorderOfActOrder) {
  const DenseProblem d = normal_weights(32, 16, 8, 5);
  const auto pw = prepare_weights(d.w1, d.w2, opts(4, 4, 5, Variant::naive));
  const ActOrder act = derive_act_order(32, 16, 5);
  EXPECT_EQ(pw.p1, reorder(group_index_actorder(32, 4, act.phi1)).perm);
  EXPECT_EQ(pw.p2, reorder(group_index_actorder(16, 4, act.phi2)).perm);
}

TEST(Prepare, ShapeMismatch) {
  const Matrix<float> w1(4, 6), w2(5, 2);
  EXPECT_THROW(prepare_weights(w1, w2, opts(2, 4, 0, Variant::naive)), std::invalid_argument);
}

TEST(Pipelines, SmallIntegerCaseExact) {
  const DenseProblem d = lossless_problem(8, 8, 8, 2, 8, 11);
  Rng rng(12);
  const auto x = integer_matrix<double>(2, 8, -3, 3, rng);
  const auto expected = testing::naive_matmul(testing::naive_matmul(x, d.w1), d.w2);
  const auto naive = prepare_weights(d.w1, d.w2, opts(2, 8, 11, Variant::naive));
  const auto aware = prepare_weights(d.w1, d.w2, opts(2, 8, 11, Variant::tp_aware));
  const auto rn = run_naive(x, naive, 2);
  const auto ra = run_tp_aware(x, aware, 2);
  EXPECT_EQ(rn.y2, expected);
  EXPECT_EQ(ra.y2, rn.y2);
  EXPECT_EQ(rn.stats.allgather_calls, 1);
  EXPECT_EQ(rn.stats.allreduce_calls, 1);
  EXPECT_EQ(ra.stats.allgather_calls, 0);
  EXPECT_EQ(ra.stats.allreduce_calls, 1);
}

TEST(Pipelines, SizeOneMatchesDenseOracleExactly) {
  const DenseProblem d = normal_weights(32, 16, 8, 6);
  const auto x = normal_activations(3, 32, 6).cast<double>();
  for (const Variant v : {Variant::naive, Variant::tp_aware}) {
    // act_order layout keeps P = identity, so every dot product runs in the oracle's order.
    const auto pw = prepare_weights(d.w1, d.w2, opts(4, 4, 6, v, GroupLayout::act_order));
    const DenseWeights dense = reconstruct_dense(pw);
    const auto oracle = run_dense_oracle(x, dense.w1, dense.w2);
    const auto r = v == Variant::naive ? run_naive(x, pw, 1) : run_tp_aware(x, pw, 1);
    EXPECT_EQ(r.y2, oracle);
    EXPECT_EQ(r.stats.allgather_bytes_total, 0);
    EXPECT_EQ(r.stats.allreduce_bytes_total, 0);
  }
}

TEST(Pipelines, AllGatherBytesExample) {
  const DenseProblem d = normal_weights(8, 8, 8, 7);
  const auto naive = prepare_weights(d.w1, d.w2, opts(2, 4, 7, Variant::naive));
  const auto r = run_naive(normal_activations(1, 8, 7), naive, 2);
  EXPECT_EQ(r.stats.allgather_bytes_total, 32);
}

TEST(Pipelines, FloatEquivalenceAndAccounting) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const DenseProblem d = normal_weights(64, 64, 64, seed);
    const auto naive = prepare_weights(d.w1, d.w2, opts(8, 4, seed, Variant::naive));
    const auto aware = prepare_weights(d.w1, d.w2, opts(8, 4, seed, Variant::tp_aware));
    const DenseWeights dense = reconstruct_dense(naive);
    for (const std::size_t m : {1u, 16u}) {
      const auto x = normal_activations(m, 64, seed);
      const auto oracle = run_dense_oracle(x.cast<double>(), dense.w1, dense.w2);
      Matrix<float> first;
      for (const int tp : {1, 2, 4, 8}) {
        const auto rn = run_naive(x, naive, tp);
        const auto ra = run_tp_aware(x, aware, tp);
        EXPECT_LE(relative_diff(rn.y2, ra.y2), 1e-6);
        EXPECT_LE(relative_diff(rn.y2, oracle), 1e-6);
        EXPECT_LE(relative_diff(ra.y2, oracle), 1e-6);
        if (tp == 1) first = rn.y2;
        EXPECT_LE(relative_diff(rn.y2, first), 1e-6);  // tp invariance
        const auto t = static_cast<std::uint64_t>(tp);
        EXPECT_EQ(static_cast<std::uint64_t>(rn.stats.allgather_bytes_total), testing::predicted_allgather(m, 64, 4, t));
        EXPECT_EQ(ra.stats.allgather_bytes_total, 0);
        EXPECT_EQ(rn.stats.allreduce_bytes_total, ra.stats.allreduce_bytes_total);
        EXPECT_EQ(static_cast<std::uint64_t>(ra.stats.allreduce_bytes_total), testing::predicted_allreduce(m, 64, 4, t));
      }
    }
  }
}

TEST(Pipelines, LosslessRegimeBitExactAcrossTp) {
  for (const int bits : {4, 8}) {
    const DenseProblem d = lossless_problem(32, 32, 16, 4, bits, 21);
    const auto naive = prepare_weights(d.w1, d.w2, opts(4, bits, 21, Variant::naive));
    const auto aware = prepare_weights(d.w1, d.w2, opts(4, bits, 21, Variant::tp_aware));
    Rng rng(22);
    const auto x = integer_matrix<double>(4, 32, -4, 4, rng);
    const auto expected = testing::naive_matmul(testing::naive_matmul(x, d.w1), d.w2);
    for (const int tp : {1, 2, 4, 8}) {
      ASSERT_EQ(run_naive(x, naive, tp).y2, expected);
      ASSERT_EQ(run_tp_aware(x, aware, tp).y2, expected);
    }
  }
}

TEST(Pipelines, FloatNaiveAndTpAwareAreBitIdentical) {
  const DenseProblem d = normal_weights(64, 32, 32, 8);
  const auto naive = prepare_weights(d.w1, d.w2, opts(8, 4, 8, Variant::naive));
  const auto aware = prepare_weights(d.w1, d.w2, opts(8, 4, 8, Variant::tp_aware));
  const auto x = normal_activations(5, 64, 8);
  for (const int tp : {1, 2, 4, 8}) EXPECT_EQ(run_naive(x, naive, tp).y2, run_tp_aware(x, aware, tp).y2);
}

TEST(Pipelines, SequentialExecutorIdentical) {
  const DenseProblem d = normal_weights(32, 32, 32, 9);
  const auto naive = prepare_weights(d.w1, d.w2, opts(8, 4, 9, Variant::naive));
  const auto x = normal_activations(4, 32, 9);
  const auto a = run_naive(x, naive, 4);
  const auto b = run_naive(x, naive, 4, {Executor::sequential, 0});
  EXPECT_EQ(a.y2, b.y2);
  EXPECT_EQ(a.stats, b.stats);
}

TEST(Pipelines, MetadataLoadsOrderedVersusActOrder) {
  const DenseProblem d = normal_weights(128, 64, 64, 10);
  const auto x = normal_activations(1, 128, 10);
  const auto ordered = prepare_weights(d.w1, d.w2, opts(16, 4, 10, Variant::tp_aware));
  const auto act = prepare_weights(d.w1, d.w2, opts(16, 4, 10, Variant::tp_aware, GroupLayout::act_order));
  const auto ro = run_tp_aware(x, ordered, 1);
  const auto ra = run_tp_aware(x, act, 1);
  EXPECT_EQ(ro.stats.metadata_loads, 128 / 16 + 64 / 16);
  EXPECT_GE(ra.stats.metadata_loads, 2 * ro.stats.metadata_loads);
  EXPECT_LE(relative_diff(ro.y2, ra.y2), 1e-6);
}

TEST(Pipelines, Errors) {
  const DenseProblem d = normal_weights(8, 12, 8, 1);
  const auto naive = prepare_weights(d.w1, d.w2, opts(2, 4, 1, Variant::naive));
  const auto x = normal_activations(1, 8, 1);
  EXPECT_THROW(run_tp_aware(x, naive, 2), std::invalid_argument);
  EXPECT_THROW(run_naive(x, naive, 8), std::invalid_argument);  // 12 % 8
  EXPECT_THROW(run_naive(normal_activations(1, 7, 1), naive, 1), std::invalid_argument);
}

TEST(DenseOracle, Examples) {
  const auto x = normal_activations(3, 4, 1).cast<double>();
  const auto eye = Matrix<double>::identity(4);
  EXPECT_EQ(run_dense_oracle(x, eye, eye), x);
  EXPECT_EQ(run_dense_oracle(Matrix<double>{{3.0}}, Matrix<double>{{-2.0}}, Matrix<double>{{0.5}})(0, 0), -3.0);
  Rng rng(2);
  const auto a = normal_matrix(4, 4, rng).cast<double>();
  const auto b = normal_matrix(4, 4, rng).cast<double>();
  const auto c = normal_matrix(4, 4, rng).cast<double>();
  EXPECT_LE(relative_diff(run_dense_oracle(a, b, c), testing::naive_matmul(testing::naive_matmul(a, b), c)), 1e-15);
  EXPECT_THROW(run_dense_oracle(a, Matrix<double>(3, 4), c), std::invalid_argument);
}

TEST(ReferenceForward, MatchesDenseOracle) {
  const DenseProblem d = normal_weights(48, 40, 24, 3);
  const auto x = normal_activations(6, 48, 3).cast<double>();
  for (const Variant v : {Variant::naive, Variant::tp_aware}) {
    const auto pw = prepare_weights(d.w1, d.w2, opts(8, 4, 3, v));
    const DenseWeights dense = reconstruct_dense(pw);
    const auto oracle = run_dense_oracle(x, dense.w1, dense.w2);
    for (const std::size_t block : {1u, 7u, 1024u}) EXPECT_LE(relative_diff(reference_forward(x, pw, block), oracle), 1e-12);
  }
}

TEST(ReconstructDense, UndoesPermutations) {
  const DenseProblem d = lossless_problem(16, 16, 8, 4, 4, 2);
  for (const Variant v : {Variant::naive, Variant::tp_aware}) {
    const auto dense = reconstruct_dense(prepare_weights(d.w1, d.w2, opts(4, 4, 2, v)));
    EXPECT_EQ(dense.w1, d.w1.cast<double>());
    EXPECT_EQ(dense.w2, d.w2.cast<double>());
  }
}

TEST(Synthetic, LosslessWeightsRequireTwoRowsPerGroup) {
  Rng rng(1);
  EXPECT_THROW(lossless_weights(5, 2, 2, 4, PermutationArray::identity(5), rng), std::invalid_argument);
  EXPECT_NO_THROW(lossless_weights(6, 2, 2, 4, PermutationArray::identity(6), rng));
}

TEST(Synthetic, ActivationPrefixesAgree) {
  EXPECT_EQ(normal_activations(8, 16, 4).slice_rows(0, 3), normal_activations(3, 16, 4));
}

}  // namespace
}  // namespace tpaware
