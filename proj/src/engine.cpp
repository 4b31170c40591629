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

#include "gbpa/engine.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <sstream>

#include "gbpa/error.hpp"
#include "gbpa/event_model.hpp"

namespace gbpa {

// ---------------------------------------------------------------- clocks

std::int64_t SimulatedClock::now_ms() const {
  std::lock_guard lock(mu_);
  return now_;
}

void SimulatedClock::advance_to(std::int64_t ms) {
  std::lock_guard lock(mu_);
  now_ = std::max(now_, ms);
}

std::int64_t WallClock::now_ms() const {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

std::int64_t sample_duration(const DurationModel& model, std::uint64_t seed, const std::string& node, int attempt) {
  if (const auto* f = std::get_if<FixedDuration>(&model)) return f->ms;
  const auto& ln = std::get<LogNormalDuration>(model);
  std::mt19937_64 rng(stable_hash(std::to_string(seed) + "/" + node + "/" + std::to_string(attempt)));
  auto unit = [&]() { return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53; };
  const double u1 = unit();
  const double u2 = unit();
  const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  return std::llround(std::exp(ln.mu + ln.sigma * z));
}

// ---------------------------------------------------------------- enum names

namespace {

constexpr std::string_view kNodeStatus[] = {"pending", "running", "succeeded", "failed", "escalated", "skipped"};
constexpr std::string_view kRunStatus[] = {"pending", "running", "suspended", "succeeded", "aborted"};
constexpr std::string_view kDecision[] = {"retry", "skip_with_value", "abort"};

template <typename E, std::size_t N>
std::optional<E> lookup(const std::string_view (&names)[N], std::string_view s) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == s) return static_cast<E>(i);
  }
  return std::nullopt;
}

}  // namespace

std::string_view to_string(NodeStatus s) noexcept { return kNodeStatus[static_cast<int>(s)]; }
std::string_view to_string(RunStatus s) noexcept { return kRunStatus[static_cast<int>(s)]; }
std::string_view to_string(DecisionKind d) noexcept { return kDecision[static_cast<int>(d)]; }
std::optional<NodeStatus> parse_node_status(std::string_view s) noexcept { return lookup<NodeStatus>(kNodeStatus, s); }
std::optional<RunStatus> parse_run_status(std::string_view s) noexcept { return lookup<RunStatus>(kRunStatus, s); }
std::optional<DecisionKind> parse_decision_kind(std::string_view s) noexcept {
  return lookup<DecisionKind>(kDecision, s);
}

// ---------------------------------------------------------------- serialisation

Json run_state_to_json(const RunState& state) {
  Json nodes = Json::object();
  for (const auto& [id, n] : state.nodes) {
    nodes[id] = Json{{"status", to_string(n.status)}, {"attempts", n.attempts},
                     {"outputs", n.outputs},          {"started_ms", n.started_ms},
                     {"finished_ms", n.finished_ms},  {"last_error", n.last_error}};
  }
  return Json{{"run_id", state.run_id},         {"spec_id", state.spec_id},
              {"status", to_string(state.status)}, {"nodes", nodes},
              {"outputs", state.outputs},       {"open_tickets", state.open_tickets},
              {"started_ms", state.started_ms}, {"finished_ms", state.finished_ms}};
}

Json ticket_to_json(const EscalationTicket& t) {
  return Json{{"id", t.id},
              {"run_id", t.run_id},
              {"node", t.node},
              {"summary", t.summary},
              {"options", t.options},
              {"created_at", format_rfc3339(Timestamp{t.created_ms})},
              {"created_ms", t.created_ms},
              {"state", t.resolved ? "resolved" : "open"},
              {"decision", t.decision ? Json(to_string(*t.decision)) : Json(nullptr)},
              {"value", t.value},
              {"resolver", t.resolver},
              {"comment", t.comment},
              {"resolved_ms", t.resolved_ms}};
}

EscalationTicket ticket_from_json(const Json& doc) {
  EscalationTicket t;
  t.id = doc.at("id").get<std::string>();
  t.run_id = doc.at("run_id").get<std::string>();
  t.node = doc.at("node").get<std::string>();
  t.summary = doc.value("summary", std::string());
  t.options = doc.value("options", t.options);
  t.created_ms = doc.value("created_ms", std::int64_t{0});
  t.resolved = doc.value("state", std::string("open")) == "resolved";
  if (doc.contains("decision") && doc.at("decision").is_string()) {
    t.decision = parse_decision_kind(doc.at("decision").get<std::string>());
  }
  t.value = doc.value("value", Json());
  t.resolver = doc.value("resolver", std::string());
  t.comment = doc.value("comment", std::string());
  t.resolved_ms = doc.value("resolved_ms", std::int64_t{-1});
  return t;
}

Json audit_to_json(const AuditRecord& r) {
  return Json{{"run", r.run},   {"seq", r.seq},   {"ts", format_rfc3339(Timestamp{r.ts})},
              {"kind", r.kind}, {"node", r.node}, {"payload", r.payload}};
}

AuditRecord audit_from_json(const Json& doc) {
  AuditRecord r;
  r.run = doc.at("run").get<std::string>();
  r.seq = doc.at("seq").get<std::uint64_t>();
  const auto ts = parse_rfc3339(doc.at("ts").get<std::string>());
  if (!ts) throw Error(Errc::BadTimestamp, doc.at("ts").get<std::string>());
  r.ts = ts->ms;
  r.kind = doc.at("kind").get<std::string>();
  r.node = doc.value("node", std::string());
  r.payload = doc.value("payload", Json::object());
  return r;
}

std::string audit_to_jsonl(const std::vector<AuditRecord>& trail) {
  std::string out;
  for (const auto& r : trail) out += audit_to_json(r).dump() + "\n";
  return out;
}

Json run_result_to_json(const RunResult& result) {
  Json tickets = Json::array();
  for (const auto& t : result.tickets) tickets.push_back(ticket_to_json(t));
  Json trail = Json::array();
  for (const auto& r : result.trail) trail.push_back(audit_to_json(r));
  return Json{{"state", run_state_to_json(result.state)},
              {"elapsed_ms", result.elapsed_ms},
              {"tickets", tickets},
              {"trail", trail}};
}

// ---------------------------------------------------------------- replay

namespace {

void apply_record(RunState& s, const AuditRecord& r) {
  const Json& p = r.payload;
  if (r.kind == "run_start") {
    s.run_id = r.run;
    s.spec_id = p.value("spec_id", std::string());
    s.status = RunStatus::running;
    s.started_ms = r.ts;
    for (const auto& id : p.at("nodes")) s.nodes[id.get<std::string>()] = NodeState{};
  } else if (r.kind == "run_status" || r.kind == "run_end") {
    s.status = *parse_run_status(p.at("status").get<std::string>());
    if (r.kind == "run_end") s.finished_ms = r.ts;
  } else if (r.kind == "status") {
    NodeState& n = s.nodes.at(r.node);
    n.status = *parse_node_status(p.at("status").get<std::string>());
    switch (n.status) {
      case NodeStatus::running:
        n.attempts = p.at("attempt").get<int>();
        if (n.started_ms < 0) n.started_ms = r.ts;
        break;
      case NodeStatus::succeeded:
      case NodeStatus::skipped:
        n.outputs = p.at("outputs").get<FieldMap>();
        n.finished_ms = r.ts;
        for (const auto& [k, v] : n.outputs) s.outputs[k] = v;
        break;
      case NodeStatus::failed:
      case NodeStatus::escalated:
        n.last_error = p.value("error", std::string());
        n.finished_ms = r.ts;
        break;
      case NodeStatus::pending:
        break;
    }
  } else if (r.kind == "ticket_open") {
    s.open_tickets.push_back(p.at("ticket").get<std::string>());
  } else if (r.kind == "ticket_resolve") {
    std::erase(s.open_tickets, p.at("ticket").get<std::string>());
  }
}

}  // namespace

RunState replay_trail(const std::vector<AuditRecord>& trail) {
  RunState s;
  for (const auto& r : trail) apply_record(s, r);
  return s;
}

// ---------------------------------------------------------------- conflicts

void check_write_conflicts(const ExecutionGraph& graph) {
  for (const auto& stage : graph.stages) {
    std::map<std::string, std::string> writer;
    for (const auto& id : stage) {
      for (const auto& field : graph.spec->find(id)->writes) {
        const auto [it, fresh] = writer.emplace(field, id);
        if (!fresh) throw Error(Errc::WriteConflict, field, it->second + " and " + id + " share a stage");
      }
    }
  }
}

// ---------------------------------------------------------------- lanes

namespace {

struct AttemptLog {
  AgentKind kind;
  int attempt = 0;
  bool fallback = false;
  OutcomeKind outcome = OutcomeKind::failed;
  std::string reason;
  std::int64_t duration_ms = 0;
  std::int64_t wall_start = 0;
  std::int64_t wall_end = 0;
};

enum class LaneEnd { succeeded, escalated, aborted };

struct LaneResult {
  std::vector<AttemptLog> attempts;
  LaneEnd end = LaneEnd::succeeded;
  FieldMap outputs;
  std::string reason;
  std::int64_t start = 0;  // placement on the timeline, filled by the coordinator
};

struct LaneJob {
  const NodeSpec* node = nullptr;
  FallbackPolicy policy;
  FieldMap inputs;
  int first_attempt = 1;
  int primary_attempts = 1;
  bool allow_fallback = true;
};

std::string check_outputs(const NodeSpec& node, const FieldMap& outputs);

// A consolidated node runs its members' operations in order; each step sees
// the node inputs plus everything earlier steps produced.
AgentOutcome run_steps(const NodeSpec& node, const Json& steps, const AgentRegistry& registry, const AgentTask& task) {
  FieldMap visible = task.inputs;
  FieldMap produced;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const Json& step = steps[i];
    NodeSpec sub;
    sub.id = node.id + "/" + step.value("id", std::to_string(i));
    sub.agent_kind = *parse_agent_kind(step.at("kind").get<std::string>());
    sub.reads = node.reads;
    sub.writes = step.at("writes").get<std::set<std::string>>();
    sub.params = step.value("params", Json::object());
    AgentTask sub_task{&sub, sub.agent_kind, &sub.params, visible, task.control, task.run_id, task.seed, task.attempt};
    AgentOutcome outcome = registry.find(sub.agent_kind)->agent->invoke(sub_task);
    if (outcome.kind != OutcomeKind::ok) {
      outcome.reason = sub.id + ": " + outcome.reason;
      return outcome;
    }
    if (auto bad = check_outputs(sub, outcome.outputs); !bad.empty()) {
      return AgentOutcome::failed(sub.id + ": invalid output: " + bad);
    }
    for (auto& [k, v] : outcome.outputs) {
      visible[k] = v;
      produced[k] = std::move(v);
    }
  }
  return AgentOutcome::ok(std::move(produced));
}

std::string check_outputs(const NodeSpec& node, const FieldMap& outputs) {
  for (const auto& [k, v] : outputs) {
    if (!node.writes.contains(k)) return "output " + k + " not declared in writes";
  }
  for (const auto& w : node.writes) {
    if (!outputs.contains(w)) return "missing output " + w;
  }
  return {};
}

LaneResult run_lane(const LaneJob& job, const AgentRegistry& registry, const Json* control, const std::string& run_id,
                    std::uint64_t seed, const Clock& clock) {
  LaneResult lane;
  auto attempt_once = [&](AgentKind kind, const Json* params, int attempt, bool fallback) {
    AttemptLog log;
    log.kind = kind;
    log.attempt = attempt;
    log.fallback = fallback;
    AgentTask task{job.node, kind, params, job.inputs, control, run_id, seed, attempt};
    log.wall_start = clock.now_ms();
    try {
      AgentOutcome outcome = params && params->contains("steps")
                                 ? run_steps(*job.node, params->at("steps"), registry, task)
                                 : registry.find(kind)->agent->invoke(task);
      log.outcome = outcome.kind;
      log.reason = outcome.reason;
      if (outcome.kind == OutcomeKind::ok) {
        if (auto bad = check_outputs(*job.node, outcome.outputs); !bad.empty()) {
          log.outcome = OutcomeKind::failed;
          log.reason = "invalid output: " + bad;
        } else {
          lane.outputs = std::move(outcome.outputs);
        }
      }
    } catch (const std::exception& e) {
      log.outcome = OutcomeKind::failed;
      log.reason = e.what();
    }
    log.wall_end = clock.now_ms();
    log.duration_ms = sample_duration(job.node->duration, seed, job.node->id, attempt);
    lane.attempts.push_back(log);
    return log.outcome;
  };

  int attempt = job.first_attempt;
  for (int i = 0; i < job.primary_attempts; ++i, ++attempt) {
    const auto outcome = attempt_once(job.node->agent_kind, &job.node->params, attempt, false);
    if (outcome == OutcomeKind::ok) return lane;
    if (outcome == OutcomeKind::escalate) {
      lane.end = LaneEnd::escalated;
      lane.reason = lane.attempts.back().reason;
      return lane;
    }
  }
  if (job.allow_fallback && job.policy.fallback_kind) {
    const auto outcome = attempt_once(*job.policy.fallback_kind, &job.policy.fallback_params, attempt, true);
    if (outcome == OutcomeKind::ok) return lane;
    if (outcome == OutcomeKind::escalate) {
      lane.end = LaneEnd::escalated;
      lane.reason = lane.attempts.back().reason;
      return lane;
    }
  }
  lane.reason = lane.attempts.back().reason;
  lane.end = job.allow_fallback && job.policy.on_exhaust == OnExhaust::abort ? LaneEnd::aborted : LaneEnd::escalated;
  return lane;
}

std::string numbered(const char* prefix, std::uint64_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s-%06llu", prefix, static_cast<unsigned long long>(n));
  return buf;
}

std::uint64_t number_of(const std::string& id) {
  const auto dash = id.rfind('-');
  if (dash == std::string::npos) return 0;
  try {
    return std::stoull(id.substr(dash + 1));
  } catch (const std::exception&) {
    return 0;
  }
}

}  // namespace

// ---------------------------------------------------------------- engine

struct Engine::Run {
  std::mutex mu;
  std::string id;
  ExecutionGraph graph;
  FieldMap inputs;
  Json control;
  std::shared_ptr<Clock> clock;
  std::uint64_t seed = 0;
  ExecuteOptions options;
  RunState state;
  std::vector<AuditRecord> trail;
  std::vector<EscalationTicket> tickets;
  std::size_t stage = 0;
};

namespace {

struct Pending {
  std::int64_t ts;
  std::string kind;
  std::string node;
  Json payload;
};

}  // namespace

Engine::Engine(AgentRegistry registry, RecordSink sink) : registry_(std::move(registry)), sink_(std::move(sink)) {}

Engine::~Engine() = default;

std::shared_ptr<Engine::Run> Engine::find_run(const std::string& run_id) const {
  std::lock_guard lock(mu_);
  const auto it = runs_.find(run_id);
  if (it == runs_.end()) throw Error(Errc::UnknownRun, run_id);
  return it->second;
}

std::set<AgentKind> kinds_used(const NodeSpec& node) {
  std::set<AgentKind> out{node.agent_kind};
  if (node.params.contains("steps")) {
    for (const auto& step : node.params.at("steps")) {
      const auto kind = parse_agent_kind(step.value("kind", std::string()));
      if (!kind) throw Error(Errc::UnknownAgentKind, step.value("kind", std::string()), "step of " + node.id);
      if (!step.contains("writes")) throw Error(Errc::InvalidSpec, node.id, "step without writes");
      out.insert(*kind);
    }
  }
  return out;
}

RunResult Engine::execute(const ExecutionGraph& graph, const FieldMap& inputs, std::shared_ptr<Clock> clock,
                          std::uint64_t seed, const ExecuteOptions& options) {
  registry_.check(*graph.spec);
  for (const auto& node : graph.spec->nodes) {
    for (const auto kind : kinds_used(node)) {
      if (!registry_.find(kind)) throw Error(Errc::UnboundAgent, std::string(to_string(kind)), "step of " + node.id);
    }
  }
  check_write_conflicts(graph);

  auto run = std::make_shared<Run>();
  {
    std::lock_guard lock(mu_);
    run->id = options.run_id.empty() ? numbered("run", next_run_) : options.run_id;
    if (runs_.contains(run->id)) throw Error(Errc::InvalidSpec, run->id, "run id already in use");
    next_run_ = std::max(next_run_, number_of(run->id)) + 1;
    runs_.emplace(run->id, run);
  }
  std::lock_guard run_lock(run->mu);
  run->graph = graph;
  run->inputs = inputs;
  if (const auto it = inputs.find("_control"); it != inputs.end()) run->control = it->second;
  run->clock = std::move(clock);
  run->seed = seed;
  run->options = options;

  Json nodes = Json::array();
  for (const auto& stage : graph.stages) {
    for (const auto& id : stage) nodes.push_back(id);
  }
  Json payload{{"spec_id", graph.spec->id},
               {"spec", options.embed_spec ? spec_to_json(*graph.spec) : Json(nullptr)},
               {"inputs", inputs},
               {"seed", seed},
               {"parallelism_cap", options.parallelism_cap},
               {"nodes", nodes}};
  const AuditRecord start{run->id, 1, run->clock->now_ms(), "run_start", "", std::move(payload)};
  run->trail.push_back(start);
  apply_record(run->state, start);
  if (sink_) sink_(start);
  return advance(*run);
}

RunResult Engine::result_of(const Run& run) const {
  RunResult r;
  r.state = run.state;
  r.trail = run.trail;
  r.tickets = run.tickets;
  r.elapsed_ms = (run.state.finished_ms >= 0 ? run.state.finished_ms : run.clock->now_ms()) - run.state.started_ms;
  return r;
}

RunResult Engine::advance(Run& run) {
  auto emit = [&](std::vector<Pending> batch) {
    std::stable_sort(batch.begin(), batch.end(), [](const Pending& a, const Pending& b) { return a.ts < b.ts; });
    for (auto& p : batch) {
      const std::int64_t floor = run.trail.empty() ? p.ts : run.trail.back().ts;
      AuditRecord rec{run.id, run.trail.size() + 1, std::max(p.ts, floor), std::move(p.kind), std::move(p.node),
                      std::move(p.payload)};
      apply_record(run.state, rec);
      if (sink_) sink_(rec);
      run.trail.push_back(std::move(rec));
    }
  };
  auto open_ticket = [&](std::vector<Pending>& batch, const std::string& node, const std::string& reason,
                         std::int64_t ts) {
    EscalationTicket t;
    {
      std::lock_guard lock(mu_);
      t.id = numbered("tkt", next_ticket_++);
      ticket_run_[t.id] = run.id;
    }
    t.run_id = run.id;
    t.node = node;
    t.summary = reason;
    t.created_ms = ts;
    batch.push_back({ts, "ticket_open", node,
                     Json{{"ticket", t.id}, {"summary", reason}, {"options", t.options}}});
    run.tickets.push_back(std::move(t));
  };

  auto is_exclusive = [&](const NodeSpec& node) {
    const auto kinds = kinds_used(node);
    return std::any_of(kinds.begin(), kinds.end(), [&](AgentKind k) { return registry_.find(k)->exclusive; });
  };

  const ProcessSpec& spec = *run.graph.spec;
  while (run.state.status == RunStatus::running && run.stage < run.graph.stages.size()) {
    std::vector<LaneJob> jobs;
    FieldMap context = run.inputs;
    for (const auto& [k, v] : run.state.outputs) context[k] = v;
    for (const auto& id : run.graph.stages[run.stage]) {
      if (run.state.nodes.at(id).status != NodeStatus::pending) continue;
      LaneJob job;
      job.node = spec.find(id);
      job.policy = spec.policy_for(id);
      for (const auto& field : job.node->reads) {
        if (const auto it = context.find(field); it != context.end()) job.inputs.emplace(field, it->second);
      }
      job.primary_attempts = job.policy.retries + 1;
      jobs.push_back(std::move(job));
    }

    const Json* control = run.control.is_null() ? nullptr : &run.control;
    std::vector<LaneResult> lanes(jobs.size());
    const int width = static_cast<int>(jobs.size());
    const int cap = run.options.parallelism_cap > 0 ? std::min(run.options.parallelism_cap, width) : width;
    std::vector<std::size_t> shared;
    std::vector<std::size_t> exclusive;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      (is_exclusive(*jobs[i].node) ? exclusive : shared).push_back(i);
    }
    if (run.options.serial_dispatch || cap <= 1) {
      for (std::size_t i = 0; i < jobs.size(); ++i) {
        lanes[i] = run_lane(jobs[i], registry_, control, run.id, run.seed, *run.clock);
      }
    } else {
      const int threads = std::max(1, std::min(cap, omp_get_max_threads()));
      const auto n = static_cast<std::int64_t>(shared.size());
#pragma omp parallel for schedule(dynamic) num_threads(threads)
      for (std::int64_t k = 0; k < n; ++k) {
        const auto i = shared[static_cast<std::size_t>(k)];
        lanes[i] = run_lane(jobs[i], registry_, control, run.id, run.seed, *run.clock);
      }
      for (const auto i : exclusive) lanes[i] = run_lane(jobs[i], registry_, control, run.id, run.seed, *run.clock);
    }

    // Timeline: list scheduling onto `cap` slots in id order; exclusive kinds never overlap.
    const std::int64_t stage_start = run.clock->now_ms();
    std::int64_t stage_end = stage_start;
    std::vector<std::int64_t> slots(static_cast<std::size_t>(std::max(cap, 1)), stage_start);
    std::int64_t exclusive_free = stage_start;
    std::vector<Pending> batch;
    bool aborted = false;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      LaneResult& lane = lanes[i];
      const NodeSpec& node = *jobs[i].node;
      std::vector<std::pair<std::int64_t, std::int64_t>> spans;
      if (run.clock->simulated()) {
        std::int64_t total = 0;
        for (const auto& a : lane.attempts) total += a.duration_ms;
        auto slot = std::min_element(slots.begin(), slots.end());
        const bool excl = is_exclusive(node);
        std::int64_t t = excl ? std::max(*slot, exclusive_free) : *slot;
        for (const auto& a : lane.attempts) {
          spans.emplace_back(t, t + a.duration_ms);
          t += a.duration_ms;
        }
        *slot = t;
        if (excl) exclusive_free = t;
      } else {
        for (const auto& a : lane.attempts) spans.emplace_back(std::max(a.wall_start, stage_start), a.wall_end);
      }
      for (std::size_t k = 0; k < lane.attempts.size(); ++k) {
        const AttemptLog& a = lane.attempts[k];
        const auto [ts0, ts1] = spans[k];
        batch.push_back({ts0, "status", node.id, Json{{"status", "running"}, {"attempt", a.attempt}}});
        batch.push_back({ts1, "agent_call", node.id,
                         Json{{"agent_kind", to_string(a.kind)},
                              {"attempt", a.attempt},
                              {"fallback", a.fallback},
                              {"outcome", a.outcome == OutcomeKind::ok         ? "ok"
                                          : a.outcome == OutcomeKind::escalate ? "escalate"
                                                                               : "failed"},
                              {"reason", a.reason},
                              {"duration_ms", ts1 - ts0}}});
        if (a.outcome == OutcomeKind::ok) {
          batch.push_back({ts1, "status", node.id,
                           Json{{"status", "succeeded"}, {"attempt", a.attempt}, {"outputs", lane.outputs}}});
        } else if (a.outcome == OutcomeKind::failed) {
          batch.push_back(
              {ts1, "status", node.id, Json{{"status", "failed"}, {"attempt", a.attempt}, {"error", a.reason}}});
        }
        stage_end = std::max(stage_end, ts1);
      }
      const std::int64_t done = spans.empty() ? stage_start : spans.back().second;
      if (lane.end == LaneEnd::escalated) {
        batch.push_back({done, "status", node.id, Json{{"status", "escalated"}, {"error", lane.reason}}});
        open_ticket(batch, node.id, lane.reason, done);
      } else if (lane.end == LaneEnd::aborted) {
        aborted = true;
      }
    }
    run.clock->advance_to(stage_end);
    if (aborted) {
      batch.push_back({stage_end, "run_end", "", Json{{"status", "aborted"}, {"reason", "retries exhausted"}}});
    } else if (std::any_of(lanes.begin(), lanes.end(), [](const LaneResult& l) { return l.end == LaneEnd::escalated; })) {
      batch.push_back({stage_end, "run_status", "", Json{{"status", "suspended"}}});
    }
    emit(std::move(batch));
    if (run.state.status == RunStatus::running) ++run.stage;
  }
  if (run.state.status == RunStatus::running) {
    emit({{run.clock->now_ms(), "run_end", "", Json{{"status", "succeeded"}}}});
  }
  return result_of(run);
}

RunResult Engine::resolve_escalation(const std::string& ticket_id, const HumanDecision& decision,
                                     const std::string& resolver, const std::string& comment) {
  std::string run_id;
  {
    std::lock_guard lock(mu_);
    const auto it = ticket_run_.find(ticket_id);
    if (it == ticket_run_.end()) throw Error(Errc::TicketNotFound, ticket_id);
    run_id = it->second;
  }
  const auto run_ptr = find_run(run_id);
  Run& run = *run_ptr;
  std::lock_guard run_lock(run.mu);
  auto ticket = std::find_if(run.tickets.begin(), run.tickets.end(),
                             [&](const EscalationTicket& t) { return t.id == ticket_id; });
  if (ticket->resolved) throw Error(Errc::AlreadyResolved, ticket_id);
  const NodeSpec& node = *run.graph.spec->find(ticket->node);
  if (decision.kind == DecisionKind::skip_with_value) {
    if (!decision.value.is_object()) throw Error(Errc::InvalidDecision, ticket_id, "skip value must be an object");
    for (const auto& [k, v] : decision.value.items()) {
      if (!node.writes.contains(k)) throw Error(Errc::InvalidDecision, ticket_id, k + " is not written by " + node.id);
    }
  }

  const std::int64_t now = std::max(run.clock->now_ms(), run.trail.back().ts);
  ticket->resolved = true;
  ticket->decision = decision.kind;
  ticket->value = decision.value;
  ticket->resolver = resolver;
  ticket->comment = comment;
  ticket->resolved_ms = now;

  std::vector<AuditRecord> fresh;
  auto push = [&](std::int64_t ts, std::string kind, std::string node_id, Json payload) {
    AuditRecord rec{run.id, run.trail.size() + 1, std::max(ts, run.trail.back().ts), std::move(kind),
                    std::move(node_id), std::move(payload)};
    apply_record(run.state, rec);
    if (sink_) sink_(rec);
    run.trail.push_back(std::move(rec));
  };
  push(now, "ticket_resolve", node.id,
       Json{{"ticket", ticket_id},
            {"decision", to_string(decision.kind)},
            {"value", decision.value},
            {"resolver", resolver},
            {"comment", comment}});

  switch (decision.kind) {
    case DecisionKind::abort:
      push(now, "run_end", "", Json{{"status", "aborted"}, {"reason", "aborted by " + resolver}});
      return result_of(run);
    case DecisionKind::skip_with_value:
      push(now, "status", node.id, Json{{"status", "skipped"}, {"outputs", decision.value}});
      break;
    case DecisionKind::retry: {
      LaneJob job;
      job.node = &node;
      job.policy = run.graph.spec->policy_for(node.id);
      FieldMap context = run.inputs;
      for (const auto& [k, v] : run.state.outputs) context[k] = v;
      for (const auto& field : node.reads) {
        if (const auto it = context.find(field); it != context.end()) job.inputs.emplace(field, it->second);
      }
      job.first_attempt = run.state.nodes.at(node.id).attempts + 1;
      job.primary_attempts = 1;
      job.allow_fallback = false;
      const Json* control = run.control.is_null() ? nullptr : &run.control;
      const LaneResult lane = run_lane(job, registry_, control, run.id, run.seed, *run.clock);
      const AttemptLog& a = lane.attempts.front();
      const std::int64_t t0 = run.clock->simulated() ? now : std::max(now, a.wall_start);
      const std::int64_t t1 = run.clock->simulated() ? now + a.duration_ms : a.wall_end;
      push(t0, "status", node.id, Json{{"status", "running"}, {"attempt", a.attempt}});
      push(t1, "agent_call", node.id,
           Json{{"agent_kind", to_string(a.kind)},
                {"attempt", a.attempt},
                {"fallback", false},
                {"outcome", a.outcome == OutcomeKind::ok ? "ok" : a.outcome == OutcomeKind::escalate ? "escalate" : "failed"},
                {"reason", a.reason},
                {"duration_ms", t1 - t0}});
      if (a.outcome == OutcomeKind::ok) {
        push(t1, "status", node.id, Json{{"status", "succeeded"}, {"attempt", a.attempt}, {"outputs", lane.outputs}});
      } else {
        if (a.outcome == OutcomeKind::failed) {
          push(t1, "status", node.id, Json{{"status", "failed"}, {"attempt", a.attempt}, {"error", a.reason}});
        }
        push(t1, "status", node.id, Json{{"status", "escalated"}, {"error", lane.reason}});
        EscalationTicket t;
        {
          std::lock_guard lock(mu_);
          t.id = numbered("tkt", next_ticket_++);
          ticket_run_[t.id] = run.id;
        }
        t.run_id = run.id;
        t.node = node.id;
        t.summary = lane.reason;
        t.created_ms = t1;
        push(t1, "ticket_open", node.id, Json{{"ticket", t.id}, {"summary", t.summary}, {"options", t.options}});
        run.tickets.push_back(std::move(t));
      }
      run.clock->advance_to(t1);
      break;
    }
  }

  if (run.state.open_tickets.empty()) {
    push(run.clock->now_ms(), "run_status", "", Json{{"status", "running"}});
    ++run.stage;
    return advance(run);
  }
  return result_of(run);
}

void Engine::restore(const std::vector<AuditRecord>& trail, std::shared_ptr<Clock> clock) {
  if (trail.empty() || trail.front().kind != "run_start") throw Error(Errc::UnknownRun, "", "trail has no run_start");
  auto run = std::make_shared<Run>();
  const AuditRecord& start = trail.front();
  run->id = start.run;
  if (start.payload.at("spec").is_null()) throw Error(Errc::UnknownRun, start.run, "trail was written without its spec");
  run->graph = build_execution_graph(parse_spec(start.payload.at("spec")));
  run->inputs = start.payload.at("inputs").get<FieldMap>();
  if (const auto it = run->inputs.find("_control"); it != run->inputs.end()) run->control = it->second;
  run->seed = start.payload.at("seed").get<std::uint64_t>();
  run->options.parallelism_cap = start.payload.value("parallelism_cap", 0);
  run->options.run_id = run->id;
  run->trail = trail;
  run->state = replay_trail(trail);
  run->clock = std::move(clock);
  run->clock->advance_to(trail.back().ts);

  std::map<std::string, std::size_t> by_id;
  for (const auto& r : trail) {
    if (r.kind == "ticket_open") {
      EscalationTicket t;
      t.id = r.payload.at("ticket").get<std::string>();
      t.run_id = run->id;
      t.node = r.node;
      t.summary = r.payload.value("summary", std::string());
      t.created_ms = r.ts;
      by_id[t.id] = run->tickets.size();
      run->tickets.push_back(std::move(t));
    } else if (r.kind == "ticket_resolve") {
      EscalationTicket& t = run->tickets.at(by_id.at(r.payload.at("ticket").get<std::string>()));
      t.resolved = true;
      t.decision = parse_decision_kind(r.payload.at("decision").get<std::string>());
      t.value = r.payload.value("value", Json());
      t.resolver = r.payload.value("resolver", std::string());
      t.comment = r.payload.value("comment", std::string());
      t.resolved_ms = r.ts;
    }
  }
  run->stage = run->graph.stages.size();
  for (std::size_t k = 0; k < run->graph.stages.size(); ++k) {
    const bool done = std::all_of(run->graph.stages[k].begin(), run->graph.stages[k].end(), [&](const std::string& id) {
      const auto s = run->state.nodes.at(id).status;
      return s == NodeStatus::succeeded || s == NodeStatus::skipped;
    });
    if (!done) {
      run->stage = k;
      break;
    }
  }

  std::lock_guard lock(mu_);
  next_run_ = std::max(next_run_, number_of(run->id) + 1);
  for (const auto& t : run->tickets) {
    ticket_run_[t.id] = run->id;
    next_ticket_ = std::max(next_ticket_, number_of(t.id) + 1);
  }
  runs_[run->id] = run;
}

std::vector<AuditRecord> Engine::audit_trail(const std::string& run_id) const {
  const auto run = find_run(run_id);
  std::lock_guard lock(run->mu);
  return run->trail;
}

RunResult Engine::snapshot(const std::string& run_id) const {
  const auto run = find_run(run_id);
  std::lock_guard lock(run->mu);
  return result_of(*run);
}

std::vector<EscalationTicket> Engine::tickets() const {
  std::vector<std::shared_ptr<Run>> runs;
  {
    std::lock_guard lock(mu_);
    for (const auto& [id, run] : runs_) runs.push_back(run);
  }
  std::vector<EscalationTicket> out;
  for (const auto& run : runs) {
    std::lock_guard lock(run->mu);
    out.insert(out.end(), run->tickets.begin(), run->tickets.end());
  }
  std::stable_sort(out.begin(), out.end(), [](const EscalationTicket& a, const EscalationTicket& b) {
    return a.created_ms != b.created_ms ? a.created_ms < b.created_ms : number_of(a.id) < number_of(b.id);
  });
  return out;
}

std::vector<std::string> Engine::run_ids() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  for (const auto& [id, run] : runs_) out.push_back(id);
  return out;
}

}  // namespace gbpa
