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

#include "tpaware/costmodel.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "tpaware/format.hpp"

namespace tpaware {

void CostParams::validate() const {
  if (!(alpha > 0.0) || !(beta > 0.0) || !(gamma > 0.0) || elem_bytes == 0) {
    throw std::invalid_argument("CostParams: alpha, beta, gamma and elem_bytes must all be positive");
  }
}

namespace {

void check_shape(const MlpShape& s, int tp) {
  if (s.m < 1 || s.k1 < 1 || s.n1 < 1 || s.n2 < 1) throw std::invalid_argument("cost model: invalid MLP shape");
  if (tp < 1) throw std::invalid_argument("cost model: tp must be at least 1");
}

double collective_s(const CostParams& p, double bytes) { return p.alpha + p.beta * bytes; }

std::uint64_t gather_block_bytes(const MlpShape& s, int tp, std::size_t elem_bytes) {
  return static_cast<std::uint64_t>(s.m) * static_cast<std::uint64_t>(s.n1 / tp) * elem_bytes;
}

std::uint64_t reduce_payload_bytes(const MlpShape& s, std::size_t elem_bytes) {
  return static_cast<std::uint64_t>(s.m) * static_cast<std::uint64_t>(s.n2) * elem_bytes;
}

}  // namespace

LatencyBreakdown project_latency(const MlpShape& shape, int tp, Variant pipeline, const CostParams& params) {
  check_shape(shape, tp);
  params.validate();
  LatencyBreakdown out;
  out.compute_s = shape.flops() / (static_cast<double>(tp) * params.gamma);
  if (tp > 1) {
    if (pipeline == Variant::naive) {
      out.allgather_s =
          collective_s(params, static_cast<double>(allgather_bytes(gather_block_bytes(shape, tp, params.elem_bytes), tp)));
    }
    out.allreduce_s =
        collective_s(params, static_cast<double>(allreduce_bytes(reduce_payload_bytes(shape, params.elem_bytes), tp)));
  }
  return out;
}

LatencyBreakdown project_measured(const MlpShape& shape, int tp, const CommStats& stats, const CostParams& params) {
  check_shape(shape, tp);
  params.validate();
  LatencyBreakdown out;
  out.compute_s = shape.flops() / (static_cast<double>(tp) * params.gamma);
  for (const auto& e : stats.events) {
    if (e.ranks.size() < 2) continue;
    const double t = collective_s(params, static_cast<double>(e.bytes));
    (e.op == CollectiveOp::all_gather ? out.allgather_s : out.allreduce_s) += t;
  }
  return out;
}

CostParams Calibration::params_for(std::int64_t m) const {
  CostParams p{alpha, beta, gamma, elem_bytes};
  if (gamma_by_m.empty()) return p;
  auto hi = gamma_by_m.lower_bound(m);
  if (hi == gamma_by_m.end()) {
    p.gamma = std::prev(hi)->second;
  } else if (hi->first == m || hi == gamma_by_m.begin()) {
    p.gamma = hi->second;
  } else {
    const auto lo = std::prev(hi);
    const double t = static_cast<double>(m - lo->first) / static_cast<double>(hi->first - lo->first);
    p.gamma = lo->second + t * (hi->second - lo->second);
  }
  return p;
}

Calibration fit_cost_model(std::int64_t k1, std::int64_t n1, std::int64_t n2,
                           std::span<const ReferenceLatency> latencies, std::size_t elem_bytes) {
  Calibration c;
  c.elem_bytes = elem_bytes;

  std::map<std::int64_t, std::pair<double, int>> baseline;
  for (const auto& r : latencies) {
    if (r.tp != 1) continue;
    auto& [sum, count] = baseline[r.m];
    sum += 0.5 * (r.naive_s + r.tp_aware_s);
    ++count;
  }
  if (baseline.empty()) throw std::runtime_error("fit_cost_model: no tp = 1 rows to calibrate compute");
  for (const auto& [m, acc] : baseline) {
    c.gamma_by_m[m] = MlpShape{m, k1, n1, n2}.flops() / (acc.first / acc.second);
  }
  c.gamma = c.gamma_by_m.begin()->second;

  // Normal equations for y = alpha * calls + beta * bytes.
  double s_cc = 0, s_cb = 0, s_bb = 0, s_cy = 0, s_by = 0;
  auto accumulate = [&](double calls, double bytes, double y) {
    s_cc += calls * calls;
    s_cb += calls * bytes;
    s_bb += bytes * bytes;
    s_cy += calls * y;
    s_by += bytes * y;
  };
  int rows = 0;
  for (const auto& r : latencies) {
    if (r.tp < 2) continue;
    if (!baseline.contains(r.m)) {
      throw std::runtime_error("fit_cost_model: no tp = 1 baseline for m = " + std::to_string(r.m));
    }
    const MlpShape shape{r.m, k1, n1, n2};
    const double compute = shape.flops() / (r.tp * c.gamma_by_m.at(r.m));
    const auto gather = static_cast<double>(allgather_bytes(gather_block_bytes(shape, r.tp, elem_bytes), r.tp));
    const auto reduce = static_cast<double>(allreduce_bytes(reduce_payload_bytes(shape, elem_bytes), r.tp));
    accumulate(2.0, gather + reduce, r.naive_s - compute);
    accumulate(1.0, reduce, r.tp_aware_s - compute);
    ++rows;
  }
  if (rows == 0) throw std::runtime_error("fit_cost_model: no tp > 1 rows to calibrate communication");
  const double det = s_cc * s_bb - s_cb * s_cb;
  if (!(std::abs(det) > 0.0)) throw std::runtime_error("fit_cost_model: singular least-squares system");
  c.alpha = (s_bb * s_cy - s_cb * s_by) / det;
  c.beta = (s_cc * s_by - s_cb * s_cy) / det;
  if (!(c.alpha > 0.0) || !(c.beta > 0.0)) {
    throw std::runtime_error("fit_cost_model: least-squares fit gave non-positive alpha or beta");
  }
  return c;
}

namespace reference {

namespace {

constexpr double ms = 1e-3;

constexpr std::array<ReferenceLatency, 20> kLlamaA100{{
    {1, 1, 0.696 * ms, 0.688 * ms},  {2, 1, 0.694 * ms, 0.683 * ms},  {4, 1, 0.685 * ms, 0.678 * ms},
    {8, 1, 0.706 * ms, 0.697 * ms},  {16, 1, 0.710 * ms, 0.695 * ms},
    {1, 2, 0.493 * ms, 0.433 * ms},  {2, 2, 0.508 * ms, 0.407 * ms},  {4, 2, 0.519 * ms, 0.412 * ms},
    {8, 2, 0.516 * ms, 0.418 * ms},  {16, 2, 0.501 * ms, 0.416 * ms},
    {1, 4, 0.472 * ms, 0.282 * ms},  {2, 4, 0.512 * ms, 0.286 * ms},  {4, 4, 0.513 * ms, 0.287 * ms},
    {8, 4, 0.518 * ms, 0.285 * ms},  {16, 4, 0.512 * ms, 0.286 * ms},
    {1, 8, 0.495 * ms, 0.284 * ms},  {2, 8, 0.503 * ms, 0.276 * ms},  {4, 8, 0.539 * ms, 0.291 * ms},
    {8, 8, 0.530 * ms, 0.286 * ms},  {16, 8, 0.512 * ms, 0.286 * ms},
}};

constexpr std::array<AverageSpeedup, 3> kLlamaA100Average{{{2, 1.22}, {4, 1.78}, {8, 1.81}}};

}  // namespace

std::span<const ReferenceLatency> llama70b_a100() { return kLlamaA100; }
std::span<const AverageSpeedup> llama70b_a100_average_speedup() { return kLlamaA100Average; }

Calibration llama70b_a100_calibration() { return fit_cost_model(kLlamaK1, kLlamaN1, kLlamaN2, kLlamaA100, 2); }

}  // namespace reference

std::string calibration_to_json(const Calibration& c) {
  nlohmann::ordered_json j;
  j["alpha"] = c.alpha;
  j["beta"] = c.beta;
  j["gamma"] = c.gamma;
  j["elem_bytes"] = c.elem_bytes;
  nlohmann::ordered_json by_m = nlohmann::ordered_json::object();
  for (const auto& [m, g] : c.gamma_by_m) by_m[std::to_string(m)] = g;
  j["gamma_by_m"] = by_m;
  return j.dump(2) + "\n";
}

Calibration calibration_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("cost params: ") + e.what());
  }
  Calibration c;
  try {
    c.alpha = j.at("alpha").get<double>();
    c.beta = j.at("beta").get<double>();
    c.elem_bytes = j.value("elem_bytes", std::size_t{2});
    c.gamma = j.value("gamma", 0.0);
    if (j.contains("gamma_by_m")) {
      for (const auto& [key, value] : j.at("gamma_by_m").items()) c.gamma_by_m[std::stoll(key)] = value.get<double>();
    }
  } catch (const std::exception& e) {
    throw std::invalid_argument(std::string("cost params: ") + e.what());
  }
  if (c.gamma_by_m.empty() && !(c.gamma > 0.0)) {
    throw std::invalid_argument("cost params: need \"gamma\" or \"gamma_by_m\"");
  }
  if (c.gamma_by_m.empty()) {
    c.params_for(1).validate();
  } else {
    for (const auto& [m, g] : c.gamma_by_m) c.params_for(m).validate();
  }
  return c;
}

void save_calibration(const std::filesystem::path& path, const Calibration& c) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << calibration_to_json(c);
}

Calibration load_calibration(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return calibration_from_json(ss.str());
}

std::vector<SpeedupRow> speedup_table(std::span<const NamedShape> shapes, std::span<const int> tp_list,
                                      std::span<const std::int64_t> m_list, const Calibration& calibration) {
  std::vector<SpeedupRow> rows;
  for (const auto& s : shapes) {
    for (const int tp : tp_list) {
      for (const std::int64_t m : m_list) {
        const MlpShape dims{m, s.k1, s.n1, s.n2};
        const CostParams p = calibration.params_for(m);
        SpeedupRow row{s.name, dims, tp, project_latency(dims, tp, Variant::naive, p).total_s(),
                       project_latency(dims, tp, Variant::tp_aware, p).total_s(), std::nullopt};
        if (tp > 1) row.speedup = row.naive_s / row.tp_aware_s;
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

void write_speedup_csv(std::ostream& out, std::span<const SpeedupRow> rows) {
  out << "shape,m,k1,n1,n2,tp,naive_ms,tp_aware_ms,speedup\n";
  for (const auto& r : rows) {
    out << r.shape << ',' << r.dims.m << ',' << r.dims.k1 << ',' << r.dims.n1 << ',' << r.dims.n2 << ',' << r.tp << ','
        << format_double(r.naive_s * 1e3) << ',' << format_double(r.tp_aware_s * 1e3) << ','
        << (r.speedup ? format_double(*r.speedup) : std::string()) << '\n';
  }
}

void write_speedup_text(std::ostream& out, std::span<const SpeedupRow> rows) {
  std::string last_group;
  for (const auto& r : rows) {
    const std::string group = r.shape + " tp=" + std::to_string(r.tp);
    if (group != last_group) {
      out << (last_group.empty() ? "" : "\n") << group << "  (K1, N1, N2) = (" << r.dims.k1 << ", " << r.dims.n1
          << ", " << r.dims.n2 << ")\n";
      out << std::setw(6) << "M" << std::setw(14) << "naive (ms)" << std::setw(16) << "tp_aware (ms)";
      if (r.tp > 1) out << std::setw(10) << "speedup";
      out << '\n';
      last_group = group;
    }
    out << std::setw(6) << r.dims.m << std::fixed << std::setprecision(4) << std::setw(14) << r.naive_s * 1e3
        << std::setw(16) << r.tp_aware_s * 1e3;
    if (r.speedup) out << std::setw(9) << std::setprecision(2) << *r.speedup << 'x';
    out << std::defaultfloat << '\n';
  }
}

}  // namespace tpaware
