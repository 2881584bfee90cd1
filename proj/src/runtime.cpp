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

#include "tpaware/runtime.hpp"

#include <condition_variable>
#include <exception>
#include <mutex>
#include <numeric>
#include <ostream>
#include <thread>

#include <json.hpp>

namespace tpaware {

const char* to_string(CollectiveOp op) noexcept {
  switch (op) {
    case CollectiveOp::all_gather:
      return "allgather";
    case CollectiveOp::all_reduce_sum:
      return "allreduce";
  }
  return "unknown";
}

const char* to_string(Axis axis) noexcept { return axis == Axis::rows ? "rows" : "cols"; }

std::uint64_t allgather_bytes(std::uint64_t block_bytes, int size) noexcept {
  const auto n = static_cast<std::uint64_t>(size);
  return block_bytes * n * (n - 1);
}

std::uint64_t allreduce_bytes(std::uint64_t payload_bytes, int size) noexcept {
  return payload_bytes * 2 * (static_cast<std::uint64_t>(size) - 1);
}

void write_event_log(std::ostream& out, const CommStats& stats) {
  for (const auto& e : stats.events) {
    nlohmann::json j{{"op", to_string(e.op)}, {"bytes", e.bytes}, {"ranks", e.ranks}};
    out << j.dump() << '\n';
  }
}

namespace detail {

namespace {

/// Thrown into ranks that are unblocked because another rank failed.
struct Aborted {};

std::string describe(const Contribution& c) {
  return std::string(to_string(c.op)) + " " + std::to_string(c.rows) + "x" + std::to_string(c.cols) +
         (c.op == CollectiveOp::all_gather ? std::string(" along ") + to_string(c.axis) : std::string());
}

}  // namespace

class SpmdGroup {
 public:
  SpmdGroup(int size, const SpmdOptions& options)
      : size_(size), options_(options), slots_(static_cast<std::size_t>(size)) {}

  void start(int rank) {
    std::unique_lock lk(mu_);
    if (options_.executor == Executor::sequential) {
      cv_.wait(lk, [&] { return aborted_ || turn_ == rank; });
    }
    if (aborted_) throw Aborted{};
  }

  void finish(int rank) {
    std::unique_lock lk(mu_);
    ++exited_;
    if (arrived_ > 0 && !aborted_) {
      abort_locked(std::make_exception_ptr(ProtocolError(
          "rank " + std::to_string(rank) + " finished while other ranks wait in a collective")));
    }
    pass_turn_locked(rank);
  }

  void fail(int rank) {
    std::unique_lock lk(mu_);
    ++exited_;
    aborted_ = true;
    pass_turn_locked(rank);
    cv_.notify_all();
  }

  std::vector<Contribution> exchange(int rank, const Contribution& mine) {
    std::unique_lock lk(mu_);
    slots_[static_cast<std::size_t>(rank)] = mine;
    arrive_and_wait(rank, lk, [&] { validate_and_record_locked(); });
    return slots_;
  }

  void release(int rank) {
    std::unique_lock lk(mu_);
    arrive_and_wait(rank, lk, [] {});
  }

  void add_metadata_loads(std::int64_t loads) {
    std::lock_guard lk(mu_);
    stats_.metadata_loads += loads;
  }

  CommStats take_stats() { return std::move(stats_); }
  std::exception_ptr protocol_error() const { return protocol_error_; }

 private:
  template <typename OnComplete>
  void arrive_and_wait(int rank, std::unique_lock<std::mutex>& lk, OnComplete on_complete) {
    if (aborted_) throw Aborted{};
    if (exited_ > 0) {
      abort_locked(std::make_exception_ptr(ProtocolError(
          "rank " + std::to_string(rank) + " entered a collective after another rank finished")));
      throw Aborted{};
    }
    const std::uint64_t generation = generation_;
    const bool sequential = options_.executor == Executor::sequential;
    if (++arrived_ == size_) {
      on_complete();
      if (aborted_) throw Aborted{};
      arrived_ = 0;
      ++generation_;
      if (sequential) turn_ = 0;
      cv_.notify_all();
    } else if (sequential) {
      turn_ = rank + 1;
      cv_.notify_all();
    }
    cv_.wait(lk, [&] { return aborted_ || (generation_ != generation && (!sequential || turn_ == rank)); });
    if (aborted_) throw Aborted{};
  }

  void validate_and_record_locked() {
    const Contribution& first = slots_.front();
    for (int r = 1; r < size_; ++r) {
      const Contribution& c = slots_[static_cast<std::size_t>(r)];
      const bool same_op = c.op == first.op && (c.op != CollectiveOp::all_gather || c.axis == first.axis);
      const bool same_payload = c.rows == first.rows && c.cols == first.cols && *c.type == *first.type;
      if (!same_op || !same_payload) {
        abort_locked(std::make_exception_ptr(ProtocolError("collective mismatch: rank 0 called " + describe(first) +
                                                           ", rank " + std::to_string(r) + " called " +
                                                           describe(c))));
        return;
      }
    }
    const std::size_t elem = options_.elem_bytes > 0 ? options_.elem_bytes : first.elem_size;
    const std::uint64_t block = static_cast<std::uint64_t>(first.rows) * first.cols * elem;
    CollectiveEvent event{first.op, 0, std::vector<int>(static_cast<std::size_t>(size_))};
    std::iota(event.ranks.begin(), event.ranks.end(), 0);
    if (first.op == CollectiveOp::all_gather) {
      event.bytes = allgather_bytes(block, size_);
      ++stats_.allgather_calls;
      stats_.allgather_bytes_total += static_cast<std::int64_t>(event.bytes);
    } else {
      event.bytes = allreduce_bytes(block, size_);
      ++stats_.allreduce_calls;
      stats_.allreduce_bytes_total += static_cast<std::int64_t>(event.bytes);
    }
    stats_.events.push_back(std::move(event));
  }

  void abort_locked(std::exception_ptr error) {
    if (!protocol_error_) protocol_error_ = std::move(error);
    aborted_ = true;
    cv_.notify_all();
  }

  void pass_turn_locked(int rank) {
    if (options_.executor == Executor::sequential && turn_ == rank && rank + 1 < size_) {
      turn_ = rank + 1;
    }
    cv_.notify_all();
  }

  const int size_;
  const SpmdOptions options_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::vector<Contribution> slots_;
  int arrived_ = 0;
  std::uint64_t generation_ = 0;
  int exited_ = 0;
  int turn_ = 0;
  bool aborted_ = false;
  std::exception_ptr protocol_error_;
  CommStats stats_;
};

std::vector<Contribution> exchange(RankContext& ctx, SpmdGroup* group, const Contribution& mine) {
  return group->exchange(ctx.rank(), mine);
}

void release(RankContext& ctx, SpmdGroup* group) { group->release(ctx.rank()); }

void check_shardable(std::size_t extent, int size, const char* what) {
  if (size < 1) throw std::invalid_argument(std::string(what) + ": size must be at least 1");
  if (extent % static_cast<std::size_t>(size) != 0) {
    throw std::invalid_argument(std::string(what) + ": extent " + std::to_string(extent) + " not divisible by " +
                                std::to_string(size) + " ranks");
  }
}

CommStats run_spmd(int size, const SpmdOptions& options, const std::function<void(RankContext&)>& body) {
  if (size < 1) throw std::invalid_argument("spmd_run: size must be at least 1");
  SpmdGroup group(size, options);
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(size));

  auto worker = [&](int rank) {
    RankContext ctx(rank, size, &group);
    try {
      group.start(rank);
      body(ctx);
      group.finish(rank);
    } catch (const Aborted&) {
      group.fail(rank);
    } catch (...) {
      errors[static_cast<std::size_t>(rank)] = std::current_exception();
      group.fail(rank);
    }
  };

  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(size));
  for (int r = 0; r < size; ++r) threads.emplace_back(worker, r);
  for (auto& t : threads) t.join();

  if (auto e = group.protocol_error()) std::rethrow_exception(e);
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return group.take_stats();
}

}  // namespace detail

void RankContext::add_metadata_loads(std::int64_t loads) { group_->add_metadata_loads(loads); }

Sharded<QuantizedMatrix> shard_columns(const QuantizedMatrix& w, int size) {
  detail::check_shardable(w.cols(), size, "shard_columns");
  Sharded<QuantizedMatrix> out{w.rows(), w.cols(), ShardAxis::cols, {}};
  const std::size_t width = w.cols() / static_cast<std::size_t>(size);
  for (int r = 0; r < size; ++r) out.locals.push_back(w.slice_cols(r * width, (r + 1) * width));
  return out;
}

Sharded<QuantizedMatrix> shard_rows(const QuantizedMatrix& w, int size) {
  detail::check_shardable(w.rows(), size, "shard_rows");
  Sharded<QuantizedMatrix> out{w.rows(), w.cols(), ShardAxis::rows, {}};
  const std::size_t height = w.rows() / static_cast<std::size_t>(size);
  for (int r = 0; r < size; ++r) out.locals.push_back(w.slice_rows(r * height, (r + 1) * height));
  return out;
}

}  // namespace tpaware
