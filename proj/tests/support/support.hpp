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

#pragma once

// Generators, oracles and scripted agents shared by the property suites and
// the acceptance binary. The oracles deliberately avoid the library's own
// graph and replay code.

#include <atomic>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "gbpa/agents.hpp"
#include "gbpa/engine.hpp"
#include "gbpa/optimizer.hpp"
#include "gbpa/process_spec.hpp"

namespace gbpa::testing {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}
  std::uint64_t next() { return rng_(); }
  std::uint64_t below(std::uint64_t n) { return rng_() % n; }
  int between(int lo, int hi) { return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo + 1))); }
  bool chance(int percent) { return below(100) < static_cast<std::uint64_t>(percent); }

 private:
  std::mt19937_64 rng_;
};

/// Node ids in random (not topological) lexicographic order.
std::vector<std::string> random_ids(Gen& g, int n);

/// Edges only from lower to higher position in `ids`, so always acyclic.
std::vector<Edge> random_edges(Gen& g, const std::vector<std::string>& ids, int edge_percent);

struct RandomSpecOptions {
  int min_nodes = 1;
  int max_nodes = 50;
  int edge_percent = 20;
  int field_pool = 12;
  bool allow_write_overlap = true;  // same-stage writers possible
};

/// A random DAG spec with random reads/writes, kinds and fixed or lognormal
/// durations. Every node writes at least one field.
ProcessSpec random_dag_spec(Gen& g, const RandomSpecOptions& options);

/// A random legacy process: a serial chain with merge keys, effectful nodes
/// and risk markers sprinkled in.
ProcessSpec random_chain_spec(Gen& g, int max_nodes);

/// A random risk policy / consolidation config that fits `spec`.
OptimizeConfig random_optimize_config(Gen& g, const ProcessSpec& spec);

// ---------------------------------------------------------------- oracles

/// Longest path (in edges) from any source to each node, by enumerating every
/// path with a depth-first walk. Exponential; for small graphs only.
std::map<std::string, int> brute_force_depths(const std::vector<std::string>& ids, const std::vector<Edge>& edges);

/// Independent fold of an audit trail into a RunState, working from the
/// serialized JSON form of each record.
RunState interpret_trail(const std::vector<AuditRecord>& trail);

/// Empty when the effectful (kind, writes) multiset of `after` equals that of
/// `before` rewritten by the merge records; otherwise a description.
std::string effectful_mismatch(const ProcessSpec& before, const ProcessSpec& after,
                               const std::vector<MergeRecord>& merges);

/// Dependency pairs (mapped through merges) that are not directed paths in
/// `after`.
std::vector<Edge> broken_dependency_paths(const DependencyRelation& deps, const ProcessSpec& after,
                                          const std::vector<MergeRecord>& merges);

/// Plain sum of stage maxima over a layering computed by relaxation.
std::int64_t oracle_makespan(const ProcessSpec& spec);

/// Trail records where a node enters running while a predecessor (any
/// ancestor through spec edges) is not yet succeeded or skipped.
std::vector<std::string> dependency_violations(const std::vector<AuditRecord>& trail, const ProcessSpec& spec);

/// True when two nodes at the same brute-force depth declare a common write.
bool same_stage_write_overlap(const ProcessSpec& spec);

// ---------------------------------------------------------------- agents

struct Invocation {
  std::string run;
  std::string node;
  std::set<std::string> writes;
  int attempt = 0;
  std::uint64_t enter = 0;
  std::uint64_t exit = 0;
};

/// Writes every declared field; fails with probability fail_percent per
/// (seed, node, attempt). Records entry/exit order for race checks. With
/// max_yields > 0 each call yields the thread a hashed number of times so
/// concurrent calls interleave.
class ScriptedAgent final : public Agent {
 public:
  explicit ScriptedAgent(int fail_percent, int max_yields = 0) : fail_percent_(fail_percent), max_yields_(max_yields) {}
  AgentOutcome invoke(const AgentTask& task) override;
  std::vector<Invocation> log() const;
  void clear();

 private:
  int fail_percent_;
  int max_yields_;
  std::atomic<std::uint64_t> tick_{0};
  mutable std::mutex mu_;
  std::vector<Invocation> log_;
};

/// Every agent kind bound to `agent`; api is exclusive.
AgentRegistry scripted_registry(const std::shared_ptr<ScriptedAgent>& agent);

/// Invocations whose intervals overlap while their write sets intersect.
std::vector<std::pair<Invocation, Invocation>> write_races(const std::vector<Invocation>& log);

/// Invocations of a node that began before an invocation of one of its
/// ancestors ended.
std::vector<std::pair<Invocation, Invocation>> order_violations(const std::vector<Invocation>& log,
                                                                 const ProcessSpec& spec);

/// Resolves tickets with random decisions until the run is terminal.
RunResult settle_randomly(Engine& engine, RunResult result, const ProcessSpec& spec, Gen& g);

// ---------------------------------------------------------------- fixtures

/// The planned wire-transfer spec for "transfer 100 USD from ACC-10001 to
/// ACC-10002" with its bound inputs, plus resources whose bank holds both
/// accounts. `control` becomes the run's "_control" input when non-null.
struct WireRun {
  ProcessSpec spec;
  FieldMap inputs;
  std::shared_ptr<AgentResources> resources;
};
WireRun wire_run(const Json& control = nullptr);

/// Drives the escalation path of the wire run end to end (failure injected on
/// the transfer node, then each human decision). Empty when every expectation
/// held; otherwise one line per broken expectation.
std::vector<std::string> check_escalation_conformance();

std::uint64_t mix(std::uint64_t a, std::uint64_t b);
std::uint64_t hash_text(const std::string& s);

}  // namespace gbpa::testing
