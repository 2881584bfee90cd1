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

// Simulated SPMD runtime.
//
// spmd_run() executes one program instance per rank. Collectives are full
// barriers that exchange rank-local matrices through shared memory. Results
// never depend on thread scheduling: gathers concatenate in rank order and
// reductions sum in rank order 0, 1, ..., size - 1.
//
// Byte accounting (per collective call, b = bytes of one rank's block):
//   all_gather      b * size * (size - 1)    every block reaches size - 1 peers
//   all_reduce_sum  b * 2 * (size - 1)       ring reduce-scatter + all-gather

#ifndef TPAWARE_RUNTIME_HPP
#define TPAWARE_RUNTIME_HPP

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <typeinfo>
#include <vector>

#include "tpaware/matrix.hpp"
#include "tpaware/quant.hpp"

namespace tpaware {

enum class Axis { rows, cols };
enum class CollectiveOp { all_gather, all_reduce_sum };

const char* to_string(CollectiveOp op) noexcept;
const char* to_string(Axis axis) noexcept;

/// Mismatched collective participation or payloads across ranks.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CollectiveEvent {
  CollectiveOp op;
  std::uint64_t bytes = 0;
  std::vector<int> ranks;

  bool operator==(const CollectiveEvent&) const = default;
};

struct CommStats {
  std::int64_t allgather_calls = 0;
  std::int64_t allgather_bytes_total = 0;
  std::int64_t allreduce_calls = 0;
  std::int64_t allreduce_bytes_total = 0;
  std::int64_t metadata_loads = 0;
  std::vector<CollectiveEvent> events;

  bool operator==(const CommStats&) const = default;
};

/// One JSON object per event: {"op": ..., "bytes": ..., "ranks": [...]}.
void write_event_log(std::ostream& out, const CommStats& stats);

std::uint64_t allgather_bytes(std::uint64_t block_bytes, int size) noexcept;
std::uint64_t allreduce_bytes(std::uint64_t payload_bytes, int size) noexcept;

enum class Executor {
  threads,     // one OS thread per rank, all running concurrently
  sequential,  // one thread per rank, but only one runs at a time in rank order
};

struct SpmdOptions {
  Executor executor = Executor::threads;
  /// Element width used for byte accounting; 0 means sizeof(element type).
  std::size_t elem_bytes = 0;
};

class RankContext;

namespace detail {
class SpmdGroup;
CommStats run_spmd(int size, const SpmdOptions& options, const std::function<void(RankContext&)>& body);
}  // namespace detail

class RankContext {
 public:
  int rank() const noexcept { return rank_; }
  int size() const noexcept { return size_; }

  void add_metadata_loads(std::int64_t loads);

 private:
  friend class detail::SpmdGroup;
  friend CommStats detail::run_spmd(int, const SpmdOptions&, const std::function<void(RankContext&)>&);
  template <typename T>
  friend Matrix<T> all_gather(RankContext&, const Matrix<T>&, Axis);
  template <typename T>
  friend Matrix<T> all_reduce_sum(RankContext&, const Matrix<T>&);

  RankContext(int rank, int size, detail::SpmdGroup* group) : rank_(rank), size_(size), group_(group) {}

  int rank_;
  int size_;
  detail::SpmdGroup* group_;
};

namespace detail {

struct Contribution {
  CollectiveOp op;
  Axis axis;
  std::size_t rows;
  std::size_t cols;
  std::size_t elem_size;
  const std::type_info* type;
  const void* data;
};

/// Runs `body` once per rank; rethrows the run's error if any rank failed.
CommStats run_spmd(int size, const SpmdOptions& options, const std::function<void(RankContext&)>& body);

/// Deposits `mine`, waits until all ranks have, and returns every rank's contribution in rank order.
std::vector<Contribution> exchange(RankContext& ctx, SpmdGroup* group, const Contribution& mine);
/// Second barrier of a collective; contributions may be released afterwards.
void release(RankContext& ctx, SpmdGroup* group);

}  // namespace detail

/// Concatenates every rank's block along `dim`, in rank order.
template <typename T>
Matrix<T> all_gather(RankContext& ctx, const Matrix<T>& local, Axis dim) {
  const detail::Contribution mine{CollectiveOp::all_gather, dim, local.rows(), local.cols(), sizeof(T), &typeid(T), &local};
  const auto all = detail::exchange(ctx, ctx.group_, mine);
  std::vector<Matrix<T>> blocks;
  blocks.reserve(all.size());
  for (const auto& c : all) blocks.push_back(*static_cast<const Matrix<T>*>(c.data));
  detail::release(ctx, ctx.group_);
  return dim == Axis::cols ? concat_cols<T>(blocks) : concat_rows<T>(blocks);
}

/// Elementwise sum over ranks, accumulated as ((r0 + r1) + r2) + ...
template <typename T>
Matrix<T> all_reduce_sum(RankContext& ctx, const Matrix<T>& local) {
  const detail::Contribution mine{CollectiveOp::all_reduce_sum, Axis::cols, local.rows(), local.cols(), sizeof(T), &typeid(T), &local};
  const auto all = detail::exchange(ctx, ctx.group_, mine);
  Matrix<T> sum = *static_cast<const Matrix<T>*>(all.front().data);
  for (std::size_t r = 1; r < all.size(); ++r) {
    const auto& other = *static_cast<const Matrix<T>*>(all[r].data);
    for (std::size_t k = 0; k < sum.size(); ++k) sum.data()[k] += other.data()[k];
  }
  detail::release(ctx, ctx.group_);
  return sum;
}

/// This rank's contiguous block of `global` along `dim`. No communication.
template <typename T>
Matrix<T> chunk(const RankContext& ctx, const Matrix<T>& global, Axis dim) {
  const std::size_t extent = dim == Axis::cols ? global.cols() : global.rows();
  const auto size = static_cast<std::size_t>(ctx.size());
  if (extent % size != 0) {
    throw std::invalid_argument("chunk: " + std::string(to_string(dim)) + " extent " + std::to_string(extent) +
                                " not divisible by " + std::to_string(size) + " ranks");
  }
  const std::size_t width = extent / size;
  const std::size_t begin = static_cast<std::size_t>(ctx.rank()) * width;
  return dim == Axis::cols ? global.slice_cols(begin, begin + width) : global.slice_rows(begin, begin + width);
}

template <typename R>
struct SpmdResult {
  std::vector<R> results;  // indexed by rank
  CommStats stats;
};

template <typename F>
auto spmd_run(int size, F&& program, const SpmdOptions& options = {})
    -> SpmdResult<std::invoke_result_t<F&, RankContext&>> {
  using R = std::invoke_result_t<F&, RankContext&>;
  if (size < 1) throw std::invalid_argument("spmd_run: size must be at least 1");
  std::vector<std::unique_ptr<R>> slots(static_cast<std::size_t>(size));
  CommStats stats = detail::run_spmd(size, options, [&](RankContext& ctx) {
    slots[static_cast<std::size_t>(ctx.rank())] = std::make_unique<R>(program(ctx));
  });
  SpmdResult<R> out{{}, std::move(stats)};
  out.results.reserve(slots.size());
  for (auto& s : slots) out.results.push_back(std::move(*s));
  return out;
}

// ---------------------------------------------------------------------------
// Sharded tensors

enum class ShardAxis { replicated, rows, cols };

template <typename Block>
struct Sharded {
  std::size_t global_rows = 0;
  std::size_t global_cols = 0;
  ShardAxis axis = ShardAxis::replicated;
  std::vector<Block> locals;  // indexed by rank

  int size() const noexcept { return static_cast<int>(locals.size()); }
  const Block& local(int rank) const { return locals.at(static_cast<std::size_t>(rank)); }
};

namespace detail {
void check_shardable(std::size_t extent, int size, const char* what);
}

/// Equal contiguous column blocks in rank order.
template <typename T>
Sharded<Matrix<T>> shard_columns(const Matrix<T>& w, int size) {
  detail::check_shardable(w.cols(), size, "shard_columns");
  Sharded<Matrix<T>> out{w.rows(), w.cols(), ShardAxis::cols, {}};
  const std::size_t width = w.cols() / static_cast<std::size_t>(size);
  for (int r = 0; r < size; ++r) out.locals.push_back(w.slice_cols(r * width, (r + 1) * width));
  return out;
}

/// Equal contiguous row blocks in rank order.
template <typename T>
Sharded<Matrix<T>> shard_rows(const Matrix<T>& w, int size) {
  detail::check_shardable(w.rows(), size, "shard_rows");
  Sharded<Matrix<T>> out{w.rows(), w.cols(), ShardAxis::rows, {}};
  const std::size_t height = w.rows() / static_cast<std::size_t>(size);
  for (int r = 0; r < size; ++r) out.locals.push_back(w.slice_rows(r * height, (r + 1) * height));
  return out;
}

template <typename T>
Sharded<Matrix<T>> replicate(const Matrix<T>& w, int size) {
  if (size < 1) throw std::invalid_argument("replicate: size must be at least 1");
  return {w.rows(), w.cols(), ShardAxis::replicated, std::vector<Matrix<T>>(static_cast<std::size_t>(size), w)};
}

Sharded<QuantizedMatrix> shard_columns(const QuantizedMatrix& w, int size);
Sharded<QuantizedMatrix> shard_rows(const QuantizedMatrix& w, int size);

/// Concatenation of the locals along the shard axis (rank 0's copy when replicated).
template <typename T>
Matrix<T> reassemble(const Sharded<Matrix<T>>& t) {
  switch (t.axis) {
    case ShardAxis::cols:
      return concat_cols<T>(t.locals);
    case ShardAxis::rows:
      return concat_rows<T>(t.locals);
    case ShardAxis::replicated:
      break;
  }
  return t.locals.at(0);
}

}  // namespace tpaware

#endif  // TPAWARE_RUNTIME_HPP
