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
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gbpa/agents.hpp"
#include "gbpa/graph.hpp"
#include "gbpa/process_spec.hpp"
#include "json.hpp"

namespace gbpa {

// ---------------------------------------------------------------- clocks

class Clock {
 public:
  virtual ~Clock() = default;
  virtual std::int64_t now_ms() const = 0;
  /// Simulated clocks jump forward (never back); the wall clock ignores it.
  virtual void advance_to(std::int64_t ms) = 0;
  /// True when node durations come from duration models rather than real time.
  virtual bool simulated() const = 0;
};

class SimulatedClock final : public Clock {
 public:
  explicit SimulatedClock(std::int64_t start_ms = 0) : now_(start_ms) {}
  std::int64_t now_ms() const override;
  void advance_to(std::int64_t ms) override;
  bool simulated() const override { return true; }

 private:
  mutable std::mutex mu_;
  std::int64_t now_;
};

class WallClock final : public Clock {
 public:
  std::int64_t now_ms() const override;
  void advance_to(std::int64_t) override {}
  bool simulated() const override { return false; }
};

/// Deterministic draw for (seed, node, attempt); fixed models return their value.
std::int64_t sample_duration(const DurationModel& model, std::uint64_t seed, const std::string& node, int attempt);

// ---------------------------------------------------------------- run state

enum class NodeStatus { pending, running, succeeded, failed, escalated, skipped };
enum class RunStatus { pending, running, suspended, succeeded, aborted };

std::string_view to_string(NodeStatus s) noexcept;
std::string_view to_string(RunStatus s) noexcept;
std::optional<NodeStatus> parse_node_status(std::string_view s) noexcept;
std::optional<RunStatus> parse_run_status(std::string_view s) noexcept;

struct NodeState {
  NodeStatus status = NodeStatus::pending;
  int attempts = 0;
  FieldMap outputs;
  std::int64_t started_ms = -1;   // first entry into running
  std::int64_t finished_ms = -1;  // latest terminal transition
  std::string last_error;

  friend bool operator==(const NodeState&, const NodeState&) = default;
};

struct RunState {
  std::string run_id;
  std::string spec_id;
  RunStatus status = RunStatus::pending;
  std::map<std::string, NodeState> nodes;
  FieldMap outputs;  // aggregated R
  std::vector<std::string> open_tickets;
  std::int64_t started_ms = 0;
  std::int64_t finished_ms = -1;

  friend bool operator==(const RunState&, const RunState&) = default;
};

Json run_state_to_json(const RunState& state);

enum class DecisionKind { retry, skip_with_value, abort };

std::string_view to_string(DecisionKind d) noexcept;
std::optional<DecisionKind> parse_decision_kind(std::string_view s) noexcept;

struct HumanDecision {
  DecisionKind kind = DecisionKind::retry;
  Json value = Json::object();  // skip_with_value: {field path: value}
};

struct EscalationTicket {
  std::string id;
  std::string run_id;
  std::string node;
  std::string summary;
  std::vector<std::string> options{"retry", "skip_with_value", "abort"};
  std::int64_t created_ms = 0;
  bool resolved = false;
  std::optional<DecisionKind> decision;
  Json value;
  std::string resolver;
  std::string comment;
  std::int64_t resolved_ms = -1;
};

Json ticket_to_json(const EscalationTicket& ticket);
EscalationTicket ticket_from_json(const Json& doc);

struct AuditRecord {
  std::string run;
  std::uint64_t seq = 0;
  std::int64_t ts = 0;
  /// run_start, run_status, status, agent_call, ticket_open, ticket_resolve, run_end
  std::string kind;
  std::string node;
  Json payload = Json::object();

  friend bool operator==(const AuditRecord&, const AuditRecord&) = default;
};

Json audit_to_json(const AuditRecord& record);
AuditRecord audit_from_json(const Json& doc);
/// One record per line.
std::string audit_to_jsonl(const std::vector<AuditRecord>& trail);

/// Rebuilds RunState from a trail (the engine's own reader; service restart uses it).
RunState replay_trail(const std::vector<AuditRecord>& trail);

struct RunResult {
  RunState state;
  std::vector<AuditRecord> trail;
  std::vector<EscalationTicket> tickets;  // all tickets of the run, creation order
  std::int64_t elapsed_ms = 0;
};

Json run_result_to_json(const RunResult& result);

// ---------------------------------------------------------------- engine

struct ExecuteOptions {
  int parallelism_cap = 0;       // 0: stage width
  bool serial_dispatch = false;  // reference path without OpenMP
  std::string run_id;            // empty: engine assigns run-NNNNNN
  bool embed_spec = true;        // run_start carries the spec (needed by restore)
};

/// Kinds a node needs bound: its own plus those of any "steps" in its params.
std::set<AgentKind> kinds_used(const NodeSpec& node);

/// Same-stage write-write overlap; throws WriteConflict.
void check_write_conflicts(const ExecutionGraph& graph);

class Engine {
 public:
  using RecordSink = std::function<void(const AuditRecord&)>;

  explicit Engine(AgentRegistry registry, RecordSink sink = {});
  ~Engine();
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  /// Runs until every stage is done, the run aborts, or an escalation suspends it.
  /// Throws UnboundAgent / WriteConflict before any node starts.
  RunResult execute(const ExecutionGraph& graph, const FieldMap& inputs, std::shared_ptr<Clock> clock,
                    std::uint64_t seed, const ExecuteOptions& options = {});

  /// Applies a human decision and continues the run. TicketNotFound, AlreadyResolved,
  /// InvalidDecision (skip value not an object of the node's writes).
  RunResult resolve_escalation(const std::string& ticket_id, const HumanDecision& decision,
                               const std::string& resolver, const std::string& comment = {});

  /// Rebuilds a run from its persisted trail so it can be queried and resumed.
  void restore(const std::vector<AuditRecord>& trail, std::shared_ptr<Clock> clock);

  std::vector<AuditRecord> audit_trail(const std::string& run_id) const;
  RunResult snapshot(const std::string& run_id) const;
  std::vector<EscalationTicket> tickets() const;
  std::vector<std::string> run_ids() const;

 private:
  struct Run;
  std::shared_ptr<Run> find_run(const std::string& run_id) const;
  RunResult advance(Run& run);
  RunResult result_of(const Run& run) const;

  AgentRegistry registry_;
  RecordSink sink_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Run>> runs_;
  std::map<std::string, std::string> ticket_run_;
  std::uint64_t next_run_ = 1;
  std::uint64_t next_ticket_ = 1;
};

}  // namespace gbpa
