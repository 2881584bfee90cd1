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

// Alpha-beta latency model for the two MLP pipelines.
//
//   compute    = 2 * M * (K1 * N1 + N1 * N2) / (tp * gamma)
//   collective = alpha + beta * bytes            (only when tp > 1)
//
// Bytes follow the runtime's accounting, so a projection fed with measured
// CommStats equals the closed form. The gather pipeline pays one all-gather
// and one all-reduce, the local pipeline only the all-reduce.

#ifndef TPAWARE_COSTMODEL_HPP
#define TPAWARE_COSTMODEL_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tpaware/pipeline.hpp"
#include "tpaware/runtime.hpp"

namespace tpaware {

struct MlpShape {
  std::int64_t m = 1;
  std::int64_t k1 = 0;
  std::int64_t n1 = 0;
  std::int64_t n2 = 0;

  double flops() const noexcept {
    return 2.0 * static_cast<double>(m) * (static_cast<double>(k1) * n1 + static_cast<double>(n1) * n2);
  }
};

struct CostParams {
  double alpha = 0.0;          // seconds per collective call
  double beta = 0.0;           // seconds per byte
  double gamma = 0.0;          // flop per second
  std::size_t elem_bytes = 2;  // activation element width

  /// Throws std::invalid_argument unless every field is strictly positive.
  void validate() const;
};

struct LatencyBreakdown {
  double compute_s = 0.0;
  double allgather_s = 0.0;
  double allreduce_s = 0.0;

  double total_s() const noexcept { return compute_s + allgather_s + allreduce_s; }
};

LatencyBreakdown project_latency(const MlpShape& shape, int tp, Variant pipeline, const CostParams& params);

/// Same model, charging each recorded multi-rank collective at its measured byte count.
LatencyBreakdown project_measured(const MlpShape& shape, int tp, const CommStats& stats, const CostParams& params);

/// Fitted parameters: one alpha/beta pair, one compute rate per batch size.
///
/// params_for(m) interpolates gamma linearly between calibrated batch sizes
/// and holds the end values outside them; with no calibrated points it uses
/// `gamma`.
struct Calibration {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  std::size_t elem_bytes = 2;
  std::map<std::int64_t, double> gamma_by_m;

  CostParams params_for(std::int64_t m) const;
};

struct ReferenceLatency {
  std::int64_t m;
  int tp;
  double naive_s;
  double tp_aware_s;
};

/// Least-squares calibration against measured latencies of one MLP shape.
///
/// tp = 1 rows carry no communication, so each batch size's compute rate is
/// gamma_m = flops(m) / mean(naive, tp_aware). The tp > 1 rows then fix alpha
/// and beta by ordinary least squares on the residual latency after compute,
/// with the gather pipeline contributing (2 calls, allgather + allreduce bytes)
/// and the local pipeline (1 call, allreduce bytes). Throws std::runtime_error
/// if the data do not yield strictly positive alpha and beta.
Calibration fit_cost_model(std::int64_t k1, std::int64_t n1, std::int64_t n2,
                           std::span<const ReferenceLatency> latencies, std::size_t elem_bytes);

namespace reference {

/// Llama-70B MLP shape (K1, N1, N2) = (8192, 28672, 8192).
inline constexpr std::int64_t kLlamaK1 = 8192;
inline constexpr std::int64_t kLlamaN1 = 28672;
inline constexpr std::int64_t kLlamaN2 = 8192;

/// 8xA100 FP16 latencies for the Llama-70B MLP shape, M in {1,2,4,8,16}, tp in {1,2,4,8}.
std::span<const ReferenceLatency> llama70b_a100();

/// Average measured speedups on the same system for tp = 2, 4, 8.
struct AverageSpeedup {
  int tp;
  double speedup;
};
std::span<const AverageSpeedup> llama70b_a100_average_speedup();

/// fit_cost_model over llama70b_a100() with 2-byte elements.
Calibration llama70b_a100_calibration();

}  // namespace reference

/// JSON config: {"alpha", "beta", "elem_bytes", "gamma"?, "gamma_by_m"?: {"<m>": gamma}}.
void save_calibration(const std::filesystem::path& path, const Calibration& c);
Calibration load_calibration(const std::filesystem::path& path);
std::string calibration_to_json(const Calibration& c);
Calibration calibration_from_json(const std::string& text);

struct NamedShape {
  std::string name;
  std::int64_t k1;
  std::int64_t n1;
  std::int64_t n2;
};

struct SpeedupRow {
  std::string shape;
  MlpShape dims;
  int tp = 1;
  double naive_s = 0.0;
  double tp_aware_s = 0.0;
  std::optional<double> speedup;  // absent for tp = 1 baselines
};

/// Rows ordered by shape, then tp, then m.
std::vector<SpeedupRow> speedup_table(std::span<const NamedShape> shapes, std::span<const int> tp_list,
                                      std::span<const std::int64_t> m_list, const Calibration& calibration);

void write_speedup_csv(std::ostream& out, std::span<const SpeedupRow> rows);
void write_speedup_text(std::ostream& out, std::span<const SpeedupRow> rows);

}  // namespace tpaware

#endif  // TPAWARE_COSTMODEL_HPP
