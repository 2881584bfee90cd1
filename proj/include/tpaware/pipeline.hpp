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

// Tensor-parallel two-layer MLP over act-order quantized weights.
//
// W1 (K1 x N1) is column-sharded, W2 (N1 x N2) row-sharded. Both were
// quantized with act-order, then rows were sorted by group (P1 for W1, P2 for
// W2) so that dequantization walks each group's metadata once.
//
// Gather pipeline (run_naive), per rank:
//   Y1 = X[:, P1] @ W1[P1]_local
//   Y1 = all_gather(Y1)[:, P2], then this rank's column chunk
//   Y2 = all_reduce_sum(Y1 @ W2[P2]_local)
//
// Local pipeline (run_tp_aware): W1's columns are additionally permuted by P2
// offline, so the first GEMM already emits Y1 in W2[P2]'s row order and each
// rank's shard lines up with its W2 shard without any exchange:
//   Y1 = X[:, P1] @ W1[P1, P2]_local
//   Y2 = all_reduce_sum(Y1 @ W2[P2]_local)

#ifndef TPAWARE_PIPELINE_HPP
#define TPAWARE_PIPELINE_HPP

#include <cstdint>

#include "tpaware/matrix.hpp"
#include "tpaware/quant.hpp"
#include "tpaware/runtime.hpp"

namespace tpaware {

enum class Variant { naive, tp_aware };

/// ordered: rows sorted by group (contiguous metadata runs).
/// act_order: rows left in act-order with an unordered g_idx; P1 = P2 = identity.
enum class GroupLayout { ordered, act_order };

const char* to_string(Variant v) noexcept;
const char* to_string(GroupLayout l) noexcept;

struct PreparedWeights {
  Variant variant = Variant::naive;
  GroupLayout layout = GroupLayout::ordered;
  QuantizedMatrix w1;  // W1[P1] (naive) or W1[P1, P2] (tp_aware)
  QuantizedMatrix w2;  // W2[P2]
  PermutationArray p1; // length K1
  PermutationArray p2; // length N1

  std::size_t k1() const noexcept { return w1.rows(); }
  std::size_t n1() const noexcept { return w1.cols(); }
  std::size_t n2() const noexcept { return w2.cols(); }

  bool operator==(const PreparedWeights&) const = default;
};

struct PrepareOptions {
  int group_size = 128;
  int bits = 4;
  std::uint64_t seed = 0;
  Variant variant = Variant::naive;
  GroupLayout layout = GroupLayout::ordered;
};

/// The act-order shuffles prepare_weights() uses for a seed:
/// phi1 = random_permutation(K1, stream_seed(seed, 1)),
/// phi2 = random_permutation(N1, stream_seed(seed, 2)).
struct ActOrder {
  PermutationArray phi1;
  PermutationArray phi2;
};
ActOrder derive_act_order(std::size_t k1, std::size_t n1, std::uint64_t seed);

/// Offline preparation from dense weights, with act-order shuffles derived from options.seed.
PreparedWeights prepare_weights(const Matrix<float>& w1, const Matrix<float>& w2, const PrepareOptions& options);

/// Same, with explicit act-order shuffles.
PreparedWeights prepare_weights(const Matrix<float>& w1, const Matrix<float>& w2, const ActOrder& act_order,
                                const PrepareOptions& options);

/// Per-rank shards of prepared weights for a TP degree.
struct ShardedWeights {
  Variant variant = Variant::naive;
  PermutationArray p1;
  PermutationArray p2;
  Sharded<QuantizedMatrix> w1;  // column shards
  Sharded<QuantizedMatrix> w2;  // row shards

  int tp() const noexcept { return w1.size(); }
};

ShardedWeights shard_weights(const PreparedWeights& pw, int tp);

template <typename T>
struct PipelineResult {
  Matrix<T> y2;
  CommStats stats;
};

template <typename T>
PipelineResult<T> run_naive(const Matrix<T>& x, const ShardedWeights& weights, const SpmdOptions& options = {});
template <typename T>
PipelineResult<T> run_tp_aware(const Matrix<T>& x, const ShardedWeights& weights, const SpmdOptions& options = {});

template <typename T>
PipelineResult<T> run_naive(const Matrix<T>& x, const PreparedWeights& pw, int tp, const SpmdOptions& options = {}) {
  return run_naive(x, shard_weights(pw, tp), options);
}
template <typename T>
PipelineResult<T> run_tp_aware(const Matrix<T>& x, const PreparedWeights& pw, int tp,
                               const SpmdOptions& options = {}) {
  return run_tp_aware(x, shard_weights(pw, tp), options);
}

/// X @ W1 @ W2 in double, through the serial reference GEMM.
Matrix<double> run_dense_oracle(const Matrix<double>& x, const Matrix<double>& w1, const Matrix<double>& w2);

struct DenseWeights {
  Matrix<double> w1;  // K1 x N1, original row/column order
  Matrix<double> w2;  // N1 x N2, original row order
};

/// Dequantized weights with every stored permutation undone.
DenseWeights reconstruct_dense(const PreparedWeights& pw);

/// X @ W1 @ W2 in double over the dequantized weights in original order, as
/// run_dense_oracle(x, reconstruct_dense(pw)) but dequantizing at most
/// `block_rows` weight rows at a time.
Matrix<double> reference_forward(const Matrix<double>& x, const PreparedWeights& pw, std::size_t block_rows = 1024);

}  // namespace tpaware

#endif  // TPAWARE_PIPELINE_HPP
