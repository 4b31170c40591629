/*
Copyright 2026 The GBPA Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

// Serial reference paths against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include "gbpa/engine.hpp"
#include "gbpa/graph.hpp"
#include "gbpa/optimizer.hpp"
#include "gbpa/sim_harness.hpp"
#include "support/support.hpp"

using namespace gbpa;

namespace {

const Scenario& reimbursement() {
  static const Scenario s = load_scenario(default_data_dir(), "reimbursement");
  return s;
}

void BM_ParseRecords(benchmark::State& state) {
  const auto& s = reimbursement();
  for (auto _ : state) benchmark::DoNotOptimize(parse_records(s.rows, s.mapping));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(s.rows.size()));
}

void BM_ParseRecordsSerial(benchmark::State& state) {
  const auto& s = reimbursement();
  for (auto _ : state) benchmark::DoNotOptimize(parse_records_serial(s.rows, s.mapping));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(s.rows.size()));
}

// Largest of a few random chains capped at n nodes.
ProcessSpec chain_of(int n) {
  testing::Gen g(static_cast<std::uint64_t>(n));
  ProcessSpec best = testing::random_chain_spec(g, n);
  for (int i = 0; i < 200; ++i) {
    auto spec = testing::random_chain_spec(g, n);
    if (spec.nodes.size() > best.nodes.size()) best = std::move(spec);
  }
  return best;
}

void BM_InferDependencies(benchmark::State& state) {
  const auto spec = chain_of(static_cast<int>(state.range(0)));
  state.counters["nodes"] = static_cast<double>(spec.nodes.size());
  for (auto _ : state) benchmark::DoNotOptimize(infer_dependencies(spec));
}

void BM_InferDependenciesSerial(benchmark::State& state) {
  const auto spec = chain_of(static_cast<int>(state.range(0)));
  state.counters["nodes"] = static_cast<double>(spec.nodes.size());
  for (auto _ : state) benchmark::DoNotOptimize(infer_dependencies_serial(spec));
}

void dispatch(benchmark::State& state, bool serial) {
  testing::Gen g(5);
  const auto spec = testing::random_dag_spec(g, {40, 50, 10, 200, false});
  const auto graph = build_execution_graph(spec);
  auto agent = std::make_shared<testing::ScriptedAgent>(0);
  ExecuteOptions opts;
  opts.serial_dispatch = serial;
  for (auto _ : state) {
    agent->clear();
    Engine engine(testing::scripted_registry(agent));
    benchmark::DoNotOptimize(engine.execute(graph, {}, std::make_shared<SimulatedClock>(), 1, opts));
  }
}

void BM_Dispatch(benchmark::State& state) { dispatch(state, false); }
void BM_DispatchSerial(benchmark::State& state) { dispatch(state, true); }

}  // namespace

BENCHMARK(BM_ParseRecords);
BENCHMARK(BM_ParseRecordsSerial);
BENCHMARK(BM_InferDependencies)->Arg(16)->Arg(64);
BENCHMARK(BM_InferDependenciesSerial)->Arg(16)->Arg(64);
BENCHMARK(BM_Dispatch);
BENCHMARK(BM_DispatchSerial);

BENCHMARK_MAIN();
