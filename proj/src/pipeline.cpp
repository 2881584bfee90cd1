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

#include "tpaware/pipeline.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

#include "tpaware/kernels.hpp"
#include "tpaware/perm.hpp"
#include "tpaware/rng.hpp"

namespace tpaware {

const char* to_string(Variant v) noexcept { return v == Variant::naive ? "naive" : "tp_aware"; }
const char* to_string(GroupLayout l) noexcept { return l == GroupLayout::ordered ? "ordered" : "act_order"; }

ActOrder derive_act_order(std::size_t k1, std::size_t n1, std::uint64_t seed) {
  return {random_permutation(static_cast<std::int64_t>(k1), stream_seed(seed, 1)),
          random_permutation(static_cast<std::int64_t>(n1), stream_seed(seed, 2))};
}

PreparedWeights prepare_weights(const Matrix<float>& w1, const Matrix<float>& w2, const PrepareOptions& options) {
  return prepare_weights(w1, w2, derive_act_order(w1.rows(), w1.cols(), options.seed), options);
}

namespace {

struct QuantizedLayer {
  QuantizedMatrix q;
  PermutationArray perm;
};

// Quantizes one layer against its act-order groups; with the ordered layout the
// rows are first sorted by group so the stored g_idx is nondecreasing.
QuantizedLayer quantize_layer(const Matrix<float>& w, const PermutationArray& phi, const PrepareOptions& options) {
  const auto rows = static_cast<std::int64_t>(w.rows());
  const GroupIndexArray act = group_index_actorder(rows, options.group_size, phi);
  if (options.layout == GroupLayout::act_order) {
    return {quantize_grouped(w, options.group_size, options.bits, act), PermutationArray::identity(w.rows())};
  }
  Reordered r = reorder(act);
  return {quantize_grouped(permute_rows(w, r.perm), options.group_size, options.bits, r.g_idx_ordered),
          std::move(r.perm)};
}

}  // namespace

PreparedWeights prepare_weights(const Matrix<float>& w1, const Matrix<float>& w2, const ActOrder& act_order,
                                const PrepareOptions& options) {
  if (w1.cols() != w2.rows()) {
    throw std::invalid_argument("prepare_weights: W1 has " + std::to_string(w1.cols()) + " columns but W2 has " +
                                std::to_string(w2.rows()) + " rows");
  }
  if (act_order.phi1.size() != w1.rows() || act_order.phi2.size() != w2.rows()) {
    throw std::invalid_argument("prepare_weights: act-order permutation lengths do not match the weights");
  }
  QuantizedLayer l1 = quantize_layer(w1, act_order.phi1, options);
  QuantizedLayer l2 = quantize_layer(w2, act_order.phi2, options);
  if (options.variant == Variant::tp_aware) l1.q = l1.q.permute_cols(l2.perm);
  return {options.variant, options.layout, std::move(l1.q), std::move(l2.q), std::move(l1.perm),
          std::move(l2.perm)};
}

ShardedWeights shard_weights(const PreparedWeights& pw, int tp) {
  if (tp < 1) throw std::invalid_argument("shard_weights: tp must be at least 1");
  if (pw.n1() % static_cast<std::size_t>(tp) != 0 || pw.n2() % static_cast<std::size_t>(tp) != 0) {
    throw std::invalid_argument("shard_weights: N1 = " + std::to_string(pw.n1()) + " and N2 = " +
                                std::to_string(pw.n2()) + " must both be divisible by tp = " + std::to_string(tp));
  }
  return {pw.variant, pw.p1, pw.p2, shard_columns(pw.w1, tp), shard_rows(pw.w2, tp)};
}

namespace {

template <typename T>
void check_inputs(const Matrix<T>& x, const ShardedWeights& weights, Variant expected) {
  if (weights.variant != expected) {
    throw std::invalid_argument(std::string("pipeline: expected ") + to_string(expected) + " weights, got " +
                                to_string(weights.variant));
  }
  if (x.cols() != weights.w1.global_rows) {
    throw std::invalid_argument("pipeline: X has " + std::to_string(x.cols()) + " columns, W1 has " +
                                std::to_string(weights.w1.global_rows) + " rows");
  }
}

template <typename T>
Matrix<T> dequantize_local(RankContext& ctx, const QuantizedMatrix& q) {
  Dequantized<T> d = dequantize<T>(q);
  ctx.add_metadata_loads(d.metadata_loads);
  return std::move(d.values);
}

template <typename T>
PipelineResult<T> collect(SpmdResult<Matrix<T>> run) {
  for (std::size_t r = 1; r < run.results.size(); ++r) {
    if (!(run.results[r] == run.results.front())) {
      throw std::logic_error("pipeline: rank " + std::to_string(r) + " disagrees with rank 0 after all-reduce");
    }
  }
  return {std::move(run.results.front()), std::move(run.stats)};
}

}  // namespace

template <typename T>
PipelineResult<T> run_naive(const Matrix<T>& x, const ShardedWeights& weights, const SpmdOptions& options) {
  check_inputs(x, weights, Variant::naive);
  auto program = [&](RankContext& ctx) {
    const Matrix<T> w1 = dequantize_local<T>(ctx, weights.w1.local(ctx.rank()));
    const Matrix<T> w2 = dequantize_local<T>(ctx, weights.w2.local(ctx.rank()));
    Matrix<T> y1 = kernels::gemm(permute_cols(x, weights.p1), w1);
    Matrix<T> y1_global = all_gather(ctx, y1, Axis::cols);
    y1_global = permute_cols(y1_global, weights.p2);
    y1 = chunk(ctx, y1_global, Axis::cols);
    const Matrix<T> y2 = kernels::gemm(y1, w2);
    return all_reduce_sum(ctx, y2);
  };
  return collect(spmd_run(weights.tp(), program, options));
}

template <typename T>
PipelineResult<T> run_tp_aware(const Matrix<T>& x, const ShardedWeights& weights, const SpmdOptions& options) {
  check_inputs(x, weights, Variant::tp_aware);
  auto program = [&](RankContext& ctx) {
    const Matrix<T> w1 = dequantize_local<T>(ctx, weights.w1.local(ctx.rank()));
    const Matrix<T> w2 = dequantize_local<T>(ctx, weights.w2.local(ctx.rank()));
    const Matrix<T> y1 = kernels::gemm(permute_cols(x, weights.p1), w1);
    const Matrix<T> y2 = kernels::gemm(y1, w2);
    return all_reduce_sum(ctx, y2);
  };
  return collect(spmd_run(weights.tp(), program, options));
}

template PipelineResult<float> run_naive<float>(const Matrix<float>&, const ShardedWeights&, const SpmdOptions&);
template PipelineResult<double> run_naive<double>(const Matrix<double>&, const ShardedWeights&, const SpmdOptions&);
template PipelineResult<float> run_tp_aware<float>(const Matrix<float>&, const ShardedWeights&, const SpmdOptions&);
template PipelineResult<double> run_tp_aware<double>(const Matrix<double>&, const ShardedWeights&,
                                                     const SpmdOptions&);

Matrix<double> run_dense_oracle(const Matrix<double>& x, const Matrix<double>& w1, const Matrix<double>& w2) {
  if (x.cols() != w1.rows() || w1.cols() != w2.rows()) {
    throw std::invalid_argument("run_dense_oracle: shapes are not conformable");
  }
  return kernels::reference::gemm(kernels::reference::gemm(x, w1), w2);
}

DenseWeights reconstruct_dense(const PreparedWeights& pw) {
  Matrix<double> w1 = dequantize<double>(pw.w1).values;
  if (pw.variant == Variant::tp_aware) w1 = permute_cols(w1, invert(pw.p2));
  w1 = permute_rows(w1, invert(pw.p1));
  Matrix<double> w2 = permute_rows(dequantize<double>(pw.w2).values, invert(pw.p2));
  return {std::move(w1), std::move(w2)};
}

namespace {

// out += x[:, cols] @ dequantize(q)[rows], block by block over the stored rows.
void accumulate_blocks(Matrix<double>& out, const Matrix<double>& x, const PermutationArray& cols,
                       const QuantizedMatrix& q, std::size_t block_rows) {
  std::vector<std::int32_t> rows;
  for (std::size_t b = 0; b < q.rows(); b += block_rows) {
    const std::size_t e = std::min(q.rows(), b + block_rows);
    rows.resize(e - b);
    for (std::size_t i = b; i < e; ++i) rows[i - b] = static_cast<std::int32_t>(i);
    const Matrix<double> w = dequantize<double>(q, std::span<const std::int32_t>(rows)).values;
    Matrix<double> xs(x.rows(), e - b);
    for (std::size_t r = 0; r < x.rows(); ++r) {
      for (std::size_t i = b; i < e; ++i) xs(r, i - b) = x(r, static_cast<std::size_t>(cols[i]));
    }
    const Matrix<double> part = kernels::reference::gemm(xs, w);
    for (std::size_t k = 0; k < out.size(); ++k) out.data()[k] += part.data()[k];
  }
}

}  // namespace

Matrix<double> reference_forward(const Matrix<double>& x, const PreparedWeights& pw, std::size_t block_rows) {
  if (x.cols() != pw.k1()) throw std::invalid_argument("reference_forward: X columns != K1");
  if (block_rows == 0) throw std::invalid_argument("reference_forward: block_rows must be positive");
  Matrix<double> y1(x.rows(), pw.n1(), 0.0);
  accumulate_blocks(y1, x, pw.p1, pw.w1, block_rows);
  // W2's stored rows follow P2; tp_aware Y1 columns already do.
  const PermutationArray cols =
      pw.variant == Variant::tp_aware ? PermutationArray::identity(pw.n1()) : pw.p2;
  Matrix<double> y2(x.rows(), pw.n2(), 0.0);
  accumulate_blocks(y2, y1, cols, pw.w2, block_rows);
  return y2;
}

}  // namespace tpaware
