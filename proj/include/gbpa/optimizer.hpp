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

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gbpa/agents.hpp"
#include "gbpa/event_model.hpp"
#include "gbpa/process_spec.hpp"
#include "json.hpp"

namespace gbpa {

enum class HazardKind { raw, war, waw, constraint };

std::string_view to_string(HazardKind kind) noexcept;

struct Dependency {
  std::string from;
  std::string to;
  HazardKind kind = HazardKind::raw;
  std::string witness;  // field path, or "constraint"

  friend auto operator<=>(const Dependency&, const Dependency&) = default;
};

struct DependencyRelation {
  std::vector<Dependency> pairs;  // sorted
  /// Distinct (from, to) pairs, sorted.
  std::vector<Edge> edges() const;
  /// As edges(), data hazards only (ordering constraints left out).
  std::vector<Edge> data_edges() const;
};

/// Event field observed for a node but absent from its declared reads/writes.
struct MinedDependency {
  std::string from;
  std::string to;
  std::string field;
  friend bool operator==(const MinedDependency&, const MinedDependency&) = default;
};

/// node id -> value of the event `how` facet that identifies that node's events.
using CorrelationKeys = std::map<std::string, std::string>;

/// Read/write hazards between nodes ordered by the spec's topological order
/// (edges plus declared ordering constraints), plus the constraints themselves.
/// With a log, undeclared field use is reported in `mined`; CorrelationKeyMissing
/// when a log is given without keys.
DependencyRelation infer_dependencies(const ProcessSpec& spec, const EventLog* log = nullptr,
                                      const CorrelationKeys& keys = {}, std::vector<MinedDependency>* mined = nullptr);
/// Single-threaded reference for the pairwise hazard scan.
DependencyRelation infer_dependencies_serial(const ProcessSpec& spec);

struct MergeRecord {
  std::string survivor;
  std::vector<std::string> members;  // sorted, includes the survivor
  std::string reason;                // "merge_key" or "consolidation"
  AgentKind agent_kind = AgentKind::reasoning;
  std::set<std::string> writes;
  bool effectful = false;
  bool risk_control = false;

  friend bool operator==(const MergeRecord&, const MergeRecord&) = default;
};

struct SkippedMerge {
  std::vector<std::string> members;
  std::string reason;
  friend bool operator==(const SkippedMerge&, const SkippedMerge&) = default;
};

struct MergeOutcome {
  ProcessSpec spec;
  std::vector<MergeRecord> records;
  std::vector<SkippedMerge> skipped;
};

/// Collapses nodes sharing (merge_key, agent_kind, reads) into the smallest id.
MergeOutcome merge_redundant(const ProcessSpec& spec);

/// Edge set := transitive reduction of deps. Node set unchanged.
ProcessSpec parallelize(const ProcessSpec& spec, const DependencyRelation& deps);

struct RiskRule {
  std::string id;
  Json trigger = Json::object();  // effectful, agent_kind, risk_control, ids, writes_any, reads_any
  enum class Placement { before, after } placement = Placement::before;
  Json checkpoint;  // NodeSpec document; "{{node}}" in the id expands to the anchor id
};

struct RiskPolicy {
  std::vector<RiskRule> rules;
  static RiskPolicy from_json(const Json& doc);
  Json to_json() const;
};

bool trigger_matches(const Json& trigger, const NodeSpec& node);

/// Splices one checkpoint per (rule, matching node). Splice edges are also
/// recorded under metadata.ordering_constraints.
ProcessSpec insert_risk_controls(const ProcessSpec& spec, const RiskPolicy& policy);

struct ConsolidationGroup {
  std::string id;
  std::vector<std::string> members;
  AgentKind agent_kind = AgentKind::reasoning;
  /// Empty: the node runs its members' operations as ordered steps.
  Json params = Json::object();
  /// Per-member params replacing that member's own in the composed steps.
  std::map<std::string, Json> step_params;
  std::optional<bool> risk_control;  // default: any member is a risk control
  static ConsolidationGroup from_json(const Json& doc);
};

/// Replaces each group by one node (reads minus internal writes, union of
/// writes); groups that would close a cycle are skipped and reported.
MergeOutcome consolidate(const ProcessSpec& spec, const std::vector<ConsolidationGroup>& groups);

using DurationTable = std::map<std::string, std::int64_t>;

/// Copy of spec with fixed durations from the table; MissingDuration for absent nodes.
ProcessSpec with_durations(const ProcessSpec& spec, const DurationTable& table);

/// Stage-barrier makespan: sum over stages of the longest node (lognormal at its mean).
std::int64_t estimate_makespan(const ProcessSpec& spec);

/// Sum over nodes of (stage start - ready time), ready = latest finish among
/// data-hazard predecessors.
std::int64_t inter_node_wait(const ProcessSpec& spec);

struct OptimizationReport {
  std::int64_t end_to_end_before = 0;
  std::int64_t end_to_end_after = 0;
  int node_count_before = 0;
  int node_count_after = 0;
  int risk_stage_count_before = 0;
  int risk_stage_count_after = 0;
  int parallel_cluster_before = 0;
  int parallel_cluster_after = 0;
  std::int64_t inter_node_wait_before = 0;
  std::int64_t inter_node_wait_after = 0;
  std::optional<Ratio> error_rate_before;
  std::optional<Ratio> error_rate_after;

  Json to_json() const;
  static OptimizationReport from_json(const Json& doc);
  friend bool operator==(const OptimizationReport&, const OptimizationReport&) = default;
};

/// Metrics of a before/after pair, recomputed from the specs alone.
OptimizationReport measure(const ProcessSpec& before, const ProcessSpec& after);

struct OptimizeConfig {
  RiskPolicy risk_policy;
  std::vector<ConsolidationGroup> consolidation;
  DurationTable durations;            // baseline; empty keeps the spec's own models
  DurationTable optimized_durations;  // overrides for the optimized spec
  CorrelationKeys correlation_keys;

  static OptimizeConfig from_json(const Json& doc);
};

struct OptimizeResult {
  ProcessSpec baseline;  // input with the baseline durations applied
  ProcessSpec spec;
  OptimizationReport report;
  DependencyRelation deps;
  std::vector<MergeRecord> merges;
  std::vector<SkippedMerge> skipped;
  std::vector<MinedDependency> mined;
};

/// infer -> merge -> parallelize -> insert risk controls -> consolidate -> reduce.
OptimizeResult optimize(const ProcessSpec& spec, const EventLog* log, const OptimizeConfig& config);

}  // namespace gbpa
