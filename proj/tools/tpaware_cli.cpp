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

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tpaware/bench.hpp"
#include "tpaware/checkpoint.hpp"
#include "tpaware/costmodel.hpp"
#include "tpaware/synthetic.hpp"

namespace {

using namespace tpaware;

struct ShapeArgs {
  std::string preset = "llama70b";
  std::vector<std::int64_t> dims;
  std::int64_t scale = 1;

  void add_to(CLI::App* app) {
    app->add_option("--preset", preset, "Shape preset: llama70b, granite20b or custom")->capture_default_str();
    app->add_option("--shape", dims, "Custom K1,N1,N2 (with --preset custom)")->delimiter(',')->expected(3);
    app->add_option("--scale", scale, "Divide every dimension by this factor")->capture_default_str();
  }

  NamedShape resolve() const {
    NamedShape s;
    if (preset == "custom") {
      if (dims.size() != 3) throw std::invalid_argument("--preset custom needs --shape K1,N1,N2");
      s = {"custom", dims[0], dims[1], dims[2]};
    } else {
      if (!dims.empty()) throw std::invalid_argument("--shape is only valid with --preset custom");
      s = preset_shape(preset);
    }
    return scale_shape(s, scale);
  }
};

/// Output stream for a path, or stdout for "" and "-".
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
      if (!*file_) throw std::runtime_error("cannot open " + path + " for writing");
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

Calibration calibration_or_default(const std::string& path) {
  return path.empty() ? reference::llama70b_a100_calibration() : load_calibration(path);
}

std::vector<ReferenceLatency> read_latency_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<ReferenceLatency> rows;
  std::string line;
  std::getline(in, line);  // header: m,tp,naive_ms,tp_aware_ms
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string f[4];
    for (auto& field : f) {
      if (!std::getline(ss, field, ',')) throw std::invalid_argument("malformed latency row: " + line);
    }
    rows.push_back({std::stoll(f[0]), std::stoi(f[1]), std::stod(f[2]) * 1e-3, std::stod(f[3]) * 1e-3});
  }
  return rows;
}

nlohmann::ordered_json stats_json(const CommStats& s) {
  nlohmann::ordered_json j;
  j["allgather_calls"] = s.allgather_calls;
  j["allgather_bytes_total"] = s.allgather_bytes_total;
  j["allreduce_calls"] = s.allreduce_calls;
  j["allreduce_bytes_total"] = s.allreduce_bytes_total;
  j["metadata_loads"] = s.metadata_loads;
  j["events"] = nlohmann::ordered_json::array();
  for (const auto& e : s.events) {
    j["events"].push_back({{"op", to_string(e.op)}, {"bytes", e.bytes}, {"ranks", e.ranks}});
  }
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tensor-parallel act-order quantized MLP: pipelines, benchmark and cost model"};
  app.require_subcommand(1);

  // bench
  RunSpec spec;
  ShapeArgs bench_shape;
  std::string pipeline = "both", format = "csv", out_path, events_path, cost_params, storage = "fp32",
              gidx = "ordered", executor = "threads";
  auto* bench = app.add_subcommand("bench", "Run both pipelines over the experiment matrix");
  bench_shape.add_to(bench);
  bench->add_option("--m", spec.m_list, "Batch sizes")->delimiter(',')->capture_default_str();
  bench->add_option("--tp", spec.tp_list, "Tensor-parallel degrees")->delimiter(',')->capture_default_str();
  bench->add_option("--group-size", spec.group_size, "Quantization group size")->capture_default_str();
  bench->add_option("--bits", spec.bits, "Code width (2, 3, 4 or 8)")->capture_default_str();
  bench->add_option("--seed", spec.seed, "Problem seed")->capture_default_str();
  bench->add_option("--pipeline", pipeline, "both, naive or tp_aware")->capture_default_str();
  bench->add_option("--repeat", spec.repeat, "Timed runs per cell")->capture_default_str();
  bench->add_option("--tolerance", spec.tolerance, "Max relative deviation from the reference")
      ->capture_default_str();
  bench->add_option("--format", format, "csv, json or text")->capture_default_str();
  bench->add_option("--out", out_path, "Report path (stdout if omitted)");
  bench->add_option("--emit-events", events_path, "Write per-collective JSON lines here");
  bench->add_option("--cost-params", cost_params, "Cost-model JSON (default: fit to the A100 reference)");
  bench->add_option("--storage", storage, "Activation width for byte accounting: fp32 or fp16")
      ->capture_default_str();
  bench->add_option("--gidx", gidx, "g_idx layout: ordered or act_order")->capture_default_str();
  bench->add_option("--executor", executor, "Rank executor: threads or sequential")->capture_default_str();

  // fit
  std::string fit_out, fit_data;
  std::vector<std::int64_t> fit_dims;
  std::size_t fit_elem_bytes = 2;
  auto* fit = app.add_subcommand("fit", "Least-squares fit of the cost model; writes parameters as JSON");
  fit->add_option("--data", fit_data, "CSV m,tp,naive_ms,tp_aware_ms (default: built-in A100 Llama-70B data)");
  fit->add_option("--shape", fit_dims, "K1,N1,N2 of the measured MLP")->delimiter(',')->expected(3);
  fit->add_option("--elem-bytes", fit_elem_bytes, "Activation width of the measurements")->capture_default_str();
  fit->add_option("--out", fit_out, "Output path (stdout if omitted)");

  // table
  std::vector<std::string> table_presets{"llama70b", "granite20b"};
  std::vector<std::int64_t> table_m{1, 2, 4, 8, 16};
  std::vector<int> table_tp{1, 2, 4, 8};
  std::string table_format = "text", table_out, table_params;
  auto* table = app.add_subcommand("table", "Projected latency and speedup tables");
  table->add_option("--preset", table_presets, "Shape presets")->delimiter(',')->capture_default_str();
  table->add_option("--m", table_m, "Batch sizes")->delimiter(',')->capture_default_str();
  table->add_option("--tp", table_tp, "Tensor-parallel degrees")->delimiter(',')->capture_default_str();
  table->add_option("--cost-params", table_params, "Cost-model JSON");
  table->add_option("--format", table_format, "csv or text")->capture_default_str();
  table->add_option("--out", table_out, "Output path (stdout if omitted)");

  // prepare
  ShapeArgs prep_shape;
  PrepareOptions prep;
  std::string prep_variant = "tp_aware", prep_gidx = "ordered", prep_out;
  auto* prepare = app.add_subcommand("prepare", "Quantize seeded weights and write a checkpoint bundle");
  prep_shape.add_to(prepare);
  prepare->add_option("--group-size", prep.group_size)->capture_default_str();
  prepare->add_option("--bits", prep.bits)->capture_default_str();
  prepare->add_option("--seed", prep.seed)->capture_default_str();
  prepare->add_option("--variant", prep_variant, "naive or tp_aware")->capture_default_str();
  prepare->add_option("--gidx", prep_gidx, "ordered or act_order")->capture_default_str();
  prepare->add_option("--out", prep_out, "Checkpoint path")->required();

  // run
  std::string run_ckpt, run_out, run_executor = "threads", run_storage = "fp32";
  std::int64_t run_m = 1;
  int run_tp = 1;
  std::uint64_t run_seed = 0;
  auto* run = app.add_subcommand("run", "Run a checkpoint's pipeline on seeded activations; prints JSON");
  run->add_option("--checkpoint", run_ckpt, "Checkpoint bundle")->required();
  run->add_option("--m", run_m)->capture_default_str();
  run->add_option("--tp", run_tp)->capture_default_str();
  run->add_option("--seed", run_seed, "Activation seed")->capture_default_str();
  run->add_option("--executor", run_executor)->capture_default_str();
  run->add_option("--storage", run_storage)->capture_default_str();
  run->add_option("--out", run_out, "Output path (stdout if omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*bench) {
      spec.shape = bench_shape.resolve();
      spec.pipeline = parse_pipeline_select(pipeline);
      spec.storage = parse_storage(storage);
      spec.layout = parse_group_layout(gidx);
      spec.executor = parse_executor(executor);
      spec.calibration = calibration_or_default(cost_params);
      const ReportFormat fmt = parse_report_format(format);
      const Report report = run_benchmark(spec);
      Output out(out_path);
      emit_report(out.stream(), report, fmt);
      if (!events_path.empty()) {
        Output events(events_path);
        emit_events(events.stream(), report);
      }
      if (!report.all_passed()) {
        std::cerr << "equivalence check failed for at least one cell\n";
        return 1;
      }
      return 0;
    }
    if (*fit) {
      Calibration c;
      if (fit_data.empty()) {
        if (!fit_dims.empty()) throw std::invalid_argument("--shape requires --data");
        c = reference::llama70b_a100_calibration();
      } else {
        if (fit_dims.size() != 3) throw std::invalid_argument("--data requires --shape K1,N1,N2");
        const auto rows = read_latency_csv(fit_data);
        c = fit_cost_model(fit_dims[0], fit_dims[1], fit_dims[2], rows, fit_elem_bytes);
      }
      Output out(fit_out);
      out.stream() << calibration_to_json(c);
      return 0;
    }
    if (*table) {
      std::vector<NamedShape> shapes;
      for (const auto& p : table_presets) shapes.push_back(preset_shape(p));
      const auto rows = speedup_table(shapes, table_tp, table_m, calibration_or_default(table_params));
      Output out(table_out);
      if (table_format == "csv") {
        write_speedup_csv(out.stream(), rows);
      } else if (table_format == "text") {
        write_speedup_text(out.stream(), rows);
      } else {
        throw std::invalid_argument("unknown table format '" + table_format + "' (expected csv or text)");
      }
      return 0;
    }
    if (*prepare) {
      const NamedShape s = prep_shape.resolve();
      prep.variant = prep_variant == "naive" ? Variant::naive
                     : prep_variant == "tp_aware"
                         ? Variant::tp_aware
                         : throw std::invalid_argument("unknown variant '" + prep_variant + "'");
      prep.layout = parse_group_layout(prep_gidx);
      const DenseProblem dense = normal_weights(static_cast<std::size_t>(s.k1), static_cast<std::size_t>(s.n1),
                                                static_cast<std::size_t>(s.n2), prep.seed);
      save_prepared(prep_out, prepare_weights(dense.w1, dense.w2, prep));
      return 0;
    }
    if (*run) {
      const PreparedWeights pw = load_prepared(run_ckpt);
      if (run_m < 1) throw std::invalid_argument("--m must be at least 1");
      const Matrix<float> x = normal_activations(static_cast<std::size_t>(run_m), pw.k1(), run_seed);
      const SpmdOptions options{parse_executor(run_executor), parse_storage(run_storage) == Storage::fp16 ? 2u : 4u};
      const PipelineResult<float> r =
          pw.variant == Variant::naive ? run_naive(x, pw, run_tp, options) : run_tp_aware(x, pw, run_tp, options);
      nlohmann::ordered_json j;
      j["variant"] = to_string(pw.variant);
      j["tp"] = run_tp;
      j["m"] = run_m;
      j["stats"] = stats_json(r.stats);
      j["y2"] = nlohmann::ordered_json::array();
      for (std::size_t i = 0; i < r.y2.rows(); ++i) {
        const auto row = r.y2.row(i);
        j["y2"].push_back(std::vector<float>(row.begin(), row.end()));
      }
      Output out(run_out);
      out.stream() << j.dump() << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
