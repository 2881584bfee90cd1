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

// OpenMP kernels against the serial reference, and the two pipelines.

#include <benchmark/benchmark.h>

#include <numeric>

#include "tpaware/kernels.hpp"
#include "tpaware/pipeline.hpp"
#include "tpaware/synthetic.hpp"

namespace {

using namespace tpaware;

void BM_GemmOmp(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const auto a = normal_matrix(m, 512, rng);
  const auto b = normal_matrix(512, 512, rng);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::gemm(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * m * 512 * 512));
}

void BM_GemmSerial(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const auto a = normal_matrix(m, 512, rng);
  const auto b = normal_matrix(512, 512, rng);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::reference::gemm(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * m * 512 * 512));
}

QuantizedMatrix quantized(std::size_t k, std::size_t n) {
  Rng rng(2);
  const auto w = normal_matrix(k, n, rng);
  return quantize_grouped(w, 128, 4, group_index_naive(static_cast<std::int64_t>(k), 128));
}

template <bool kOmp>
void BM_Dequantize(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  const auto q = quantized(k, 1024);
  std::vector<std::int32_t> rows(k);
  std::iota(rows.begin(), rows.end(), 0);
  Matrix<float> out(k, 1024);
  for (auto _ : state) {
    if constexpr (kOmp) {
      kernels::dequantize_rows<float>(q, rows, out);
    } else {
      kernels::reference::dequantize_rows<float>(q, rows, out);
    }
    benchmark::DoNotOptimize(out.data().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(k * 1024));
}

template <Variant kVariant>
void BM_Pipeline(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const int tp = static_cast<int>(state.range(1));
  const DenseProblem d = normal_weights(512, 1792, 512, 3);
  const auto pw = prepare_weights(d.w1, d.w2, {128, 4, 3, kVariant, GroupLayout::ordered});
  const auto shards = shard_weights(pw, tp);
  const auto x = normal_activations(m, 512, 3);
  for (auto _ : state) {
    auto r = kVariant == Variant::naive ? run_naive(x, shards) : run_tp_aware(x, shards);
    benchmark::DoNotOptimize(r.y2.data().data());
  }
}

BENCHMARK(BM_GemmOmp)->Arg(1)->Arg(16)->Arg(128);
BENCHMARK(BM_GemmSerial)->Arg(1)->Arg(16)->Arg(128);
BENCHMARK(BM_Dequantize<true>)->Name("BM_DequantizeOmp")->Arg(512)->Arg(4096);
BENCHMARK(BM_Dequantize<false>)->Name("BM_DequantizeSerial")->Arg(512)->Arg(4096);
BENCHMARK(BM_Pipeline<Variant::naive>)->Name("BM_PipelineNaive")->ArgsProduct({{1, 16}, {1, 2, 4, 8}})->UseRealTime();
BENCHMARK(BM_Pipeline<Variant::tp_aware>)->Name("BM_PipelineTpAware")->ArgsProduct({{1, 16}, {1, 2, 4, 8}})->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
