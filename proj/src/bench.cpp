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

#include "tpaware/bench.hpp"

#include <algorithm>
#include <chrono>
#include <iomanip>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "tpaware/format.hpp"
#include "tpaware/synthetic.hpp"

namespace tpaware {

NamedShape preset_shape(std::string_view name) {
  if (name == "llama70b") return {"llama70b", 8192, 28672, 8192};
  if (name == "granite20b") return {"granite20b", 6144, 24576, 6144};
  throw std::invalid_argument("unknown preset '" + std::string(name) + "' (expected llama70b or granite20b)");
}

PipelineSelect parse_pipeline_select(std::string_view s) {
  if (s == "both") return PipelineSelect::both;
  if (s == "naive") return PipelineSelect::naive;
  if (s == "tp_aware") return PipelineSelect::tp_aware;
  throw std::invalid_argument("unknown pipeline '" + std::string(s) + "' (expected both, naive or tp_aware)");
}

Storage parse_storage(std::string_view s) {
  if (s == "fp32") return Storage::fp32;
  if (s == "fp16") return Storage::fp16;
  throw std::invalid_argument("unknown storage '" + std::string(s) + "' (expected fp32 or fp16)");
}

ReportFormat parse_report_format(std::string_view s) {
  if (s == "csv") return ReportFormat::csv;
  if (s == "json") return ReportFormat::json;
  if (s == "text") return ReportFormat::text;
  throw std::invalid_argument("unknown format '" + std::string(s) + "' (expected csv, json or text)");
}

GroupLayout parse_group_layout(std::string_view s) {
  if (s == "ordered") return GroupLayout::ordered;
  if (s == "act_order") return GroupLayout::act_order;
  throw std::invalid_argument("unknown g_idx layout '" + std::string(s) + "' (expected ordered or act_order)");
}

Executor parse_executor(std::string_view s) {
  if (s == "threads") return Executor::threads;
  if (s == "sequential") return Executor::sequential;
  throw std::invalid_argument("unknown executor '" + std::string(s) + "' (expected threads or sequential)");
}

NamedShape scale_shape(const NamedShape& shape, std::int64_t divisor) {
  if (divisor < 1) throw std::invalid_argument("scale divisor must be at least 1");
  if (divisor == 1) return shape;
  if (shape.k1 % divisor || shape.n1 % divisor || shape.n2 % divisor) {
    throw std::invalid_argument("scale divisor " + std::to_string(divisor) + " does not divide every dimension of " +
                                shape.name);
  }
  return {shape.name + "/" + std::to_string(divisor), shape.k1 / divisor, shape.n1 / divisor, shape.n2 / divisor};
}

void RunSpec::validate() const {
  if (shape.k1 < 1 || shape.n1 < 1 || shape.n2 < 1) throw std::invalid_argument("shape dimensions must be positive");
  if (m_list.empty() || tp_list.empty()) throw std::invalid_argument("m and tp lists must not be empty");
  for (const auto m : m_list) {
    if (m < 1) throw std::invalid_argument("every m must be at least 1");
  }
  for (const int tp : tp_list) {
    if (tp < 1) throw std::invalid_argument("every tp must be at least 1");
    if (shape.n1 % tp != 0 || shape.n2 % tp != 0) {
      throw std::invalid_argument("N1 = " + std::to_string(shape.n1) + " and N2 = " + std::to_string(shape.n2) +
                                  " must be divisible by tp = " + std::to_string(tp));
    }
  }
  if (group_size < 1 || group_size > shape.k1 || group_size > shape.n1) {
    throw std::invalid_argument("group size must lie in [1, min(K1, N1)]");
  }
  if (!is_supported_bit_width(bits)) throw std::invalid_argument("unsupported bit width " + std::to_string(bits));
  if (repeat < 1) throw std::invalid_argument("repeat must be at least 1");
  if (!(tolerance >= 0.0)) throw std::invalid_argument("tolerance must be nonnegative");
}

bool Report::all_passed() const noexcept {
  return std::all_of(rows.begin(), rows.end(), [](const ReportRow& r) { return r.passed; });
}

namespace {

struct Timed {
  PipelineResult<float> result;
  double wall_ms_median;
};

template <typename F>
Timed run_timed(int repeat, F&& run) {
  std::vector<double> times;
  std::optional<PipelineResult<float>> first;
  for (int i = 0; i < repeat; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    PipelineResult<float> r = run();
    const auto t1 = std::chrono::steady_clock::now();
    times.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    if (!first) first = std::move(r);
  }
  std::sort(times.begin(), times.end());
  const std::size_t n = times.size();
  const double median = n % 2 ? times[n / 2] : 0.5 * (times[n / 2 - 1] + times[n / 2]);
  return {std::move(*first), median};
}

}  // namespace

Report run_benchmark(const RunSpec& spec) {
  spec.validate();
  const auto k1 = static_cast<std::size_t>(spec.shape.k1);
  const auto n1 = static_cast<std::size_t>(spec.shape.n1);
  const auto n2 = static_cast<std::size_t>(spec.shape.n2);
  const bool want_naive = spec.pipeline != PipelineSelect::tp_aware;
  const bool want_aware = spec.pipeline != PipelineSelect::naive;

  PreparedWeights naive_w;
  PreparedWeights aware_w;
  Matrix<double> reference;
  const std::int64_t m_max = *std::max_element(spec.m_list.begin(), spec.m_list.end());
  const Matrix<float> x_all = normal_activations(static_cast<std::size_t>(m_max), k1, spec.seed);
  {
    const DenseProblem dense = normal_weights(k1, n1, n2, spec.seed);
    const ActOrder act = derive_act_order(k1, n1, spec.seed);
    PrepareOptions opts{spec.group_size, spec.bits, spec.seed, Variant::naive, spec.layout};
    if (want_naive) naive_w = prepare_weights(dense.w1, dense.w2, act, opts);
    opts.variant = Variant::tp_aware;
    if (want_aware) aware_w = prepare_weights(dense.w1, dense.w2, act, opts);
  }
  reference = reference_forward(x_all.cast<double>(), want_naive ? naive_w : aware_w);

  const SpmdOptions options{spec.executor, spec.elem_bytes()};
  Report report;
  report.shape = spec.shape.name;
  for (const std::int64_t m : spec.m_list) {
    const auto rows = static_cast<std::size_t>(m);
    const Matrix<float> x = x_all.slice_rows(0, rows);
    const Matrix<double> ref = reference.slice_rows(0, rows);
    const MlpShape dims{m, spec.shape.k1, spec.shape.n1, spec.shape.n2};
    CostParams params = spec.calibration.params_for(m);
    params.elem_bytes = spec.elem_bytes();

    for (const int tp : spec.tp_list) {
      std::optional<double> speedup;
      if (tp > 1) {
        speedup = project_latency(dims, tp, Variant::naive, params).total_s() /
                  project_latency(dims, tp, Variant::tp_aware, params).total_s();
      }
      std::vector<std::pair<Variant, Timed>> cells;
      if (want_naive) {
        const ShardedWeights sw = shard_weights(naive_w, tp);
        cells.emplace_back(Variant::naive, run_timed(spec.repeat, [&] { return run_naive(x, sw, options); }));
      }
      if (want_aware) {
        const ShardedWeights sw = shard_weights(aware_w, tp);
        cells.emplace_back(Variant::tp_aware, run_timed(spec.repeat, [&] { return run_tp_aware(x, sw, options); }));
      }
      const bool cross_ok =
          cells.size() < 2 || relative_diff(cells[0].second.result.y2, cells[1].second.result.y2) <= spec.tolerance;

      for (auto& [variant, timed] : cells) {
        const CommStats& s = timed.result.stats;
        ReportRow row;
        row.m = m;
        row.k1 = dims.k1;
        row.n1 = dims.n1;
        row.n2 = dims.n2;
        row.tp = tp;
        row.pipeline = variant;
        row.max_abs_diff = relative_diff(timed.result.y2, ref);
        row.allgather_bytes = s.allgather_bytes_total;
        row.allreduce_bytes = s.allreduce_bytes_total;
        row.metadata_loads = s.metadata_loads;
        row.wall_ms_median = timed.wall_ms_median;
        row.projected_ms = project_measured(dims, tp, s, params).total_s() * 1e3;
        row.speedup_projected = speedup;
        row.passed = cross_ok && row.max_abs_diff <= spec.tolerance;
        row.events = s.events;
        report.rows.push_back(std::move(row));
      }
    }
  }
  return report;
}

const std::vector<std::string>& report_columns() {
  static const std::vector<std::string> columns{
      "m",           "k1",           "n1",        "n2",           "tp",           "pipeline",         "max_abs_diff",
      "allgather_bytes", "allreduce_bytes", "metadata_loads", "wall_ms_median", "projected_ms", "speedup_projected"};
  return columns;
}

namespace {

std::vector<std::string> cells_of(const ReportRow& r) {
  return {std::to_string(r.m),
          std::to_string(r.k1),
          std::to_string(r.n1),
          std::to_string(r.n2),
          std::to_string(r.tp),
          to_string(r.pipeline),
          format_double(r.max_abs_diff),
          std::to_string(r.allgather_bytes),
          std::to_string(r.allreduce_bytes),
          std::to_string(r.metadata_loads),
          format_double(r.wall_ms_median),
          format_double(r.projected_ms),
          r.speedup_projected ? format_double(*r.speedup_projected) : std::string()};
}

nlohmann::ordered_json json_of(const ReportRow& r) {
  nlohmann::ordered_json j;
  j["m"] = r.m;
  j["k1"] = r.k1;
  j["n1"] = r.n1;
  j["n2"] = r.n2;
  j["tp"] = r.tp;
  j["pipeline"] = to_string(r.pipeline);
  j["max_abs_diff"] = r.max_abs_diff;
  j["allgather_bytes"] = r.allgather_bytes;
  j["allreduce_bytes"] = r.allreduce_bytes;
  j["metadata_loads"] = r.metadata_loads;
  j["wall_ms_median"] = r.wall_ms_median;
  j["projected_ms"] = r.projected_ms;
  j["speedup_projected"] = r.speedup_projected ? nlohmann::ordered_json(*r.speedup_projected) : nullptr;
  return j;
}

void write_csv(std::ostream& out, const Report& report) {
  const auto& cols = report_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (const auto& r : report.rows) {
    const auto cells = cells_of(r);
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
    out << '\n';
  }
}

void write_text(std::ostream& out, const Report& report) {
  const auto& cols = report_columns();
  std::vector<std::vector<std::string>> table{cols};
  for (const auto& r : report.rows) table.push_back(cells_of(r));
  std::vector<std::size_t> width(cols.size(), 0);
  for (const auto& line : table) {
    for (std::size_t i = 0; i < line.size(); ++i) width[i] = std::max(width[i], line[i].size());
  }
  for (const auto& line : table) {
    for (std::size_t i = 0; i < line.size(); ++i) {
      out << (i ? "  " : "") << std::setw(static_cast<int>(width[i])) << line[i];
    }
    out << '\n';
  }
}

}  // namespace

void emit_report(std::ostream& out, const Report& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::csv:
      write_csv(out, report);
      break;
    case ReportFormat::text:
      write_text(out, report);
      break;
    case ReportFormat::json: {
      nlohmann::ordered_json j;
      j["shape"] = report.shape;
      j["all_passed"] = report.all_passed();
      j["rows"] = nlohmann::ordered_json::array();
      for (const auto& r : report.rows) j["rows"].push_back(json_of(r));
      out << j.dump(2) << '\n';
      break;
    }
  }
  if (!out) throw std::runtime_error("failed to write report");
}

void emit_events(std::ostream& out, const Report& report) {
  for (const auto& r : report.rows) {
    for (const auto& e : r.events) {
      nlohmann::ordered_json j;
      j["m"] = r.m;
      j["tp"] = r.tp;
      j["pipeline"] = to_string(r.pipeline);
      j["op"] = to_string(e.op);
      j["bytes"] = e.bytes;
      j["ranks"] = e.ranks;
      out << j.dump() << '\n';
    }
  }
  if (!out) throw std::runtime_error("failed to write event log");
}

}  // namespace tpaware
