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

// Experiment-matrix harness behind the CLI.
//
// One report row per (m, tp, pipeline) cell, in that loop order. Every cell
// runs on the same seeded weights and on the first m rows of one seeded
// activation matrix, and is checked against the float64 dense reference.

#ifndef TPAWARE_BENCH_HPP
#define TPAWARE_BENCH_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tpaware/costmodel.hpp"
#include "tpaware/pipeline.hpp"
#include "tpaware/runtime.hpp"

namespace tpaware {

/// "llama70b" (8192, 28672, 8192) or "granite20b" (6144, 24576, 6144).
NamedShape preset_shape(std::string_view name);

enum class PipelineSelect { both, naive, tp_aware };
enum class Storage { fp32, fp16 };
enum class ReportFormat { csv, json, text };

PipelineSelect parse_pipeline_select(std::string_view s);
Storage parse_storage(std::string_view s);
ReportFormat parse_report_format(std::string_view s);
GroupLayout parse_group_layout(std::string_view s);
Executor parse_executor(std::string_view s);

struct RunSpec {
  NamedShape shape = preset_shape("llama70b");
  std::vector<std::int64_t> m_list{1, 2, 4, 8, 16};
  std::vector<int> tp_list{1, 2, 4, 8};
  int group_size = 128;
  int bits = 4;
  std::uint64_t seed = 0;
  PipelineSelect pipeline = PipelineSelect::both;
  int repeat = 1;
  double tolerance = 1e-6;
  /// Activation width charged by the byte accounting; arithmetic stays fp32.
  Storage storage = Storage::fp32;
  GroupLayout layout = GroupLayout::ordered;
  Executor executor = Executor::threads;
  Calibration calibration = reference::llama70b_a100_calibration();

  std::size_t elem_bytes() const noexcept { return storage == Storage::fp16 ? 2 : 4; }

  /// Throws std::invalid_argument on empty lists, nonpositive entries, or
  /// dimensions not divisible by every tp.
  void validate() const;
};

/// Divides every dimension by `divisor`; the result keeps the preset name with a "/divisor" suffix.
NamedShape scale_shape(const NamedShape& shape, std::int64_t divisor);

struct ReportRow {
  std::int64_t m = 0;
  std::int64_t k1 = 0;
  std::int64_t n1 = 0;
  std::int64_t n2 = 0;
  int tp = 1;
  Variant pipeline = Variant::naive;
  /// max |Y - Y_ref| / max |Y_ref| against the float64 dense reference.
  double max_abs_diff = 0.0;
  std::uint64_t allgather_bytes = 0;
  std::uint64_t allreduce_bytes = 0;
  std::int64_t metadata_loads = 0;
  double wall_ms_median = 0.0;
  double projected_ms = 0.0;
  std::optional<double> speedup_projected;  // tp > 1 only
  /// Within tolerance of the reference and, when both pipelines ran, of each other.
  bool passed = true;
  /// Collectives of the first repeat.
  std::vector<CollectiveEvent> events;
};

struct Report {
  std::string shape;
  std::vector<ReportRow> rows;

  bool all_passed() const noexcept;
};

Report run_benchmark(const RunSpec& spec);

/// Column order: m, k1, n1, n2, tp, pipeline, max_abs_diff, allgather_bytes,
/// allreduce_bytes, metadata_loads, wall_ms_median, projected_ms, speedup_projected.
const std::vector<std::string>& report_columns();

void emit_report(std::ostream& out, const Report& report, ReportFormat format);

/// One JSON object per line: m, tp, pipeline, op, bytes, ranks.
void emit_events(std::ostream& out, const Report& report);

}  // namespace tpaware

#endif  // TPAWARE_BENCH_HPP
