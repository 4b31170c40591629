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
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "gbpa/decimal.hpp"
#include "gbpa/event_model.hpp"
#include "gbpa/process_spec.hpp"
#include "json.hpp"

namespace gbpa {

using Json = nlohmann::json;

/// Field path -> value. Ordered so that serialisations are stable.
using FieldMap = std::map<std::string, Json>;

struct AgentTask {
  const NodeSpec* node = nullptr;
  AgentKind kind = AgentKind::reasoning;  // differs from node->agent_kind for fallbacks
  const Json* params = nullptr;
  FieldMap inputs;                        // values of node->reads present in the run
  const Json* control = nullptr;          // run-level "_control" object, may be null
  std::string run_id;
  std::uint64_t seed = 0;
  int attempt = 1;
};

enum class OutcomeKind { ok, failed, escalate };

struct AgentOutcome {
  OutcomeKind kind = OutcomeKind::ok;
  FieldMap outputs;
  std::string reason;

  static AgentOutcome ok(FieldMap outputs) { return {OutcomeKind::ok, std::move(outputs), {}}; }
  static AgentOutcome failed(std::string reason) { return {OutcomeKind::failed, {}, std::move(reason)}; }
  static AgentOutcome escalate(std::string reason) { return {OutcomeKind::escalate, {}, std::move(reason)}; }
};

class Agent {
 public:
  virtual ~Agent() = default;
  /// Must be safe for concurrent calls on distinct nodes unless the kind is
  /// registered as exclusive.
  virtual AgentOutcome invoke(const AgentTask& task) = 0;
};

class AgentRegistry {
 public:
  struct Binding {
    std::shared_ptr<Agent> agent;
    bool exclusive = false;
    std::set<std::string> output_schema;  // empty = unrestricted
  };

  /// Throws InvalidSpec if the kind is already bound.
  void bind(AgentKind kind, std::shared_ptr<Agent> agent, bool exclusive = false,
            std::set<std::string> output_schema = {});
  const Binding* find(AgentKind kind) const;
  /// Every kind used by the spec (and its fallbacks) is bound and node writes
  /// fit the kind's schema.
  void check(const ProcessSpec& spec) const;

 private:
  std::map<AgentKind, Binding> bindings_;
};

// ---------------------------------------------------------------- rules

enum class Severity { block, warn };

struct Rule {
  std::string id;
  std::string field;
  Json predicate;  // {"op": ..., ...}; see README for the operator table
  Severity severity = Severity::block;
  std::string code;
};

struct RuleSet {
  std::vector<Rule> rules;
  /// Named identifier lists referenced by in/not_in predicates.
  std::map<std::string, std::set<std::string>> lists;

  static RuleSet from_json(const Json& doc);
  /// Newline-delimited identifiers; blank lines and '#' comments skipped.
  void load_list(const std::string& name, const std::filesystem::path& path);
};

struct Violation {
  std::string rule_id;
  std::string code;
  std::string field;
  Severity severity = Severity::block;
  friend bool operator==(const Violation&, const Violation&) = default;
};

struct CheckReport {
  std::vector<Violation> violations;
  bool passed = true;  // no block-severity violation
};

CheckReport validation_check(const FieldMap& fields, const RuleSet& rules);

// ---------------------------------------------------------------- document

/// "key: value" lines; returns exactly the schema's keys.
FieldMap document_extract(std::string_view doc, const std::vector<std::string>& schema);

// ---------------------------------------------------------------- authorization

struct LimitTable {
  std::map<std::string, Decimal> role_limits;
  static LimitTable from_json(const Json& doc);
};

enum class Decision { approve, require_escalation };

/// Approves iff amount <= the role's limit (inclusive). UnknownRole otherwise.
Decision authorize(const Decimal& amount, const std::string& role, const LimitTable& limits);

// ---------------------------------------------------------------- retrieval / analysis

/// Events whose narratives contain every query term, ranked by total term
/// occurrences then recency; empty query gives the k most recent.
std::vector<Event5W3H1R> retrieval_lookup(std::string_view query, const EventLog& log, std::size_t k = 10);

struct Ratio {
  std::int64_t num = 0;
  std::int64_t den = 1;
  static Ratio make(std::int64_t num, std::int64_t den);
  double to_double() const noexcept { return static_cast<double>(num) / static_cast<double>(den); }
  friend bool operator==(const Ratio&, const Ratio&) = default;
};

enum class MetricKind { count, sum, error_rate };

struct Metric {
  MetricKind kind = MetricKind::count;
  std::string field;  // for sum: "how_much", "how_long" or an attribute name
};

/// Exact: count and sum come back with den = 10^k, error_rate as failures/total.
Ratio data_analyst_compute(const Metric& metric, const EventLog& log);

// ---------------------------------------------------------------- mock bank

/// In-memory core-banking ledger. Money leaving the bank lands in an external
/// sink so the total is conserved.
class MockBank {
 public:
  void open_account(const std::string& id, Decimal balance);
  bool has_account(const std::string& id) const;
  Decimal balance(const std::string& id) const;
  Decimal external_sink() const;
  Decimal total() const;

  /// Dispatches a mock endpoint: balance, verify_accounts, check_funds, debit,
  /// transfer, notify. Throws UnknownEndpoint / InsufficientFunds / UnknownRun.
  Json call(const std::string& endpoint, const Json& args);

 private:
  mutable std::mutex mu_;
  std::map<std::string, Decimal> accounts_;
  Decimal sink_;
  std::uint64_t txn_counter_ = 0;
};

/// Shared data the default agents draw on.
struct AgentResources {
  std::map<std::string, RuleSet> rule_sets;
  LimitTable limits;
  std::shared_ptr<MockBank> bank = std::make_shared<MockBank>();
  std::shared_ptr<const EventLog> log = std::make_shared<EventLog>();
  std::vector<std::string> web_corpus;
};

std::shared_ptr<Agent> make_document_agent();
std::shared_ptr<Agent> make_validation_agent(std::shared_ptr<const AgentResources> res);
std::shared_ptr<Agent> make_authorization_agent(std::shared_ptr<const AgentResources> res);
std::shared_ptr<Agent> make_retrieval_agent(std::shared_ptr<const AgentResources> res, bool render_context);
std::shared_ptr<Agent> make_web_search_agent(std::shared_ptr<const AgentResources> res);
std::shared_ptr<Agent> make_data_analyst_agent(std::shared_ptr<const AgentResources> res);
std::shared_ptr<Agent> make_api_agent(std::shared_ptr<const AgentResources> res);
std::shared_ptr<Agent> make_human_review_agent();

/// Binds all ten kinds. api is exclusive (ledger order matters).
AgentRegistry make_default_registry(std::shared_ptr<const AgentResources> res);

/// FNV-1a over a string; used for deterministic reference ids.
std::uint64_t stable_hash(std::string_view text) noexcept;

}  // namespace gbpa
