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

#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <thread>

#include "gbpa/error.hpp"
#include "gbpa/planner.hpp"
#include "gbpa/service.hpp"
#include "gbpa/sim_harness.hpp"

namespace gbpa::testing {

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t hash_text(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) h = (h ^ c) * 1099511628211ULL;
  return h;
}

// ---------------------------------------------------------------- generators

std::vector<std::string> random_ids(Gen& g, int n) {
  std::set<std::string> used;
  std::vector<std::string> ids;
  while (static_cast<int>(ids.size()) < n) {
    std::string id = "n" + std::to_string(g.below(1000));
    if (used.insert(id).second) ids.push_back(id);
  }
  return ids;
}

std::vector<Edge> random_edges(Gen& g, const std::vector<std::string>& ids, int edge_percent) {
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (std::size_t j = i + 1; j < ids.size(); ++j) {
      if (g.chance(edge_percent)) edges.emplace_back(ids[i], ids[j]);
    }
  }
  return edges;
}

namespace {

constexpr AgentKind kAllKinds[] = {AgentKind::document,      AgentKind::retrieval, AgentKind::rag,
                                   AgentKind::web_search,    AgentKind::authorization,
                                   AgentKind::data_analyst,  AgentKind::reasoning, AgentKind::api,
                                   AgentKind::risk_control,  AgentKind::human_review};

AgentKind random_kind(Gen& g) { return kAllKinds[g.below(std::size(kAllKinds))]; }

}  // namespace

ProcessSpec random_dag_spec(Gen& g, const RandomSpecOptions& options) {
  ProcessSpec spec;
  spec.id = "random-" + std::to_string(g.below(1000000));
  spec.version = "1";
  const int n = g.between(options.min_nodes, options.max_nodes);
  const auto ids = random_ids(g, n);
  const int edge_percent = g.between(0, options.edge_percent);
  spec.edges = random_edges(g, ids, edge_percent);
  const int shared_percent = options.allow_write_overlap ? g.between(0, 60) : 0;
  for (const auto& id : ids) {
    NodeSpec node;
    node.id = id;
    node.agent_kind = random_kind(g);
    const int writes = g.between(1, 2);
    for (int k = 0; k < writes; ++k) {
      if (g.chance(shared_percent)) node.writes.insert("s" + std::to_string(g.below(options.field_pool)));
      else node.writes.insert(id + ".out" + std::to_string(k));
    }
    const int reads = g.between(0, 3);
    for (int k = 0; k < reads; ++k) {
      if (g.chance(50)) node.reads.insert("s" + std::to_string(g.below(options.field_pool)));
      else node.reads.insert(ids[g.below(ids.size())] + ".out0");
    }
    if (g.chance(70)) node.duration = FixedDuration{static_cast<std::int64_t>(g.below(5000))};
    else node.duration = LogNormalDuration{6.0 + static_cast<double>(g.below(20)) / 10.0, 0.5};
    spec.nodes.push_back(std::move(node));
    if (g.chance(30)) {
      FallbackPolicy policy;
      policy.retries = g.between(0, 3);
      if (g.chance(40)) policy.fallback_kind = random_kind(g);
      if (g.chance(20)) policy.on_exhaust = OnExhaust::abort;
      spec.fallback[id] = policy;
    }
  }
  return spec;
}

ProcessSpec random_chain_spec(Gen& g, int max_nodes) {
  ProcessSpec spec;
  spec.id = "legacy-" + std::to_string(g.below(1000000));
  spec.version = "1";
  const int n = g.between(1, max_nodes);
  const auto ids = random_ids(g, n);
  const int pool = g.between(2, 10);
  const int key_pool = g.between(1, 3);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    NodeSpec node;
    node.id = ids[i];
    node.agent_kind = g.chance(50) ? AgentKind::reasoning : random_kind(g);
    node.writes.insert(ids[i] + ".out");
    if (g.chance(30)) node.writes.insert("f" + std::to_string(g.below(pool)));
    const int reads = g.between(0, 3);
    for (int k = 0; k < reads; ++k) {
      if (g.chance(50) && i > 0) node.reads.insert(ids[g.below(i)] + ".out");
      else node.reads.insert("f" + std::to_string(g.below(pool)));
    }
    node.duration = FixedDuration{static_cast<std::int64_t>(g.between(0, 10000))};
    node.effectful = g.chance(25);
    node.risk_control = g.chance(10);
    if (g.chance(30)) {
      node.merge_key = "k" + std::to_string(g.below(key_pool));
      // merge groups need equal kind and reads
      node.agent_kind = AgentKind::reasoning;
      node.reads = {"shared.in"};
    }
    spec.nodes.push_back(std::move(node));
    if (i > 0) spec.edges.emplace_back(ids[i - 1], ids[i]);
  }
  if (g.chance(30) && n > 2) {
    const auto a = g.below(ids.size());
    const auto b = g.below(ids.size());
    if (a < b) spec.metadata["ordering_constraints"] = Json::array({Json::array({ids[a], ids[b]})});
  }
  return spec;
}

OptimizeConfig random_optimize_config(Gen& g, const ProcessSpec& spec) {
  OptimizeConfig config;
  const int rules = g.between(0, 3);
  for (int r = 0; r < rules; ++r) {
    RiskRule rule;
    rule.id = "rule" + std::to_string(r);
    switch (g.below(4)) {
      case 0: rule.trigger = {{"effectful", true}}; break;
      case 1: rule.trigger = {{"agent_kind", std::string(to_string(random_kind(g)))}}; break;
      case 2: rule.trigger = {{"ids", Json::array({spec.nodes[g.below(spec.nodes.size())].id})}}; break;
      default: rule.trigger = {{"risk_control", true}}; break;
    }
    rule.placement = g.chance(50) ? RiskRule::Placement::before : RiskRule::Placement::after;
    rule.checkpoint = {{"id", "cp" + std::to_string(r) + "-{{node}}"},
                       {"agent_kind", "risk_control"},
                       {"reads", Json::array()},
                       {"writes", Json::array()}};
    config.risk_policy.rules.push_back(std::move(rule));
  }
  // Consolidate a few nodes that never carry a merge key.
  std::vector<std::string> plain;
  for (const auto& n : spec.nodes) {
    if (!n.merge_key) plain.push_back(n.id);
  }
  if (plain.size() >= 2 && g.chance(40)) {
    ConsolidationGroup group;
    group.id = "grp";
    const int size = g.between(2, static_cast<int>(std::min<std::size_t>(plain.size(), 3)));
    for (int k = 0; k < size; ++k) {
      const auto pick = g.below(plain.size());
      group.members.push_back(plain[pick]);
      plain.erase(plain.begin() + static_cast<std::ptrdiff_t>(pick));
    }
    group.agent_kind = AgentKind::reasoning;
    config.consolidation.push_back(std::move(group));
  }
  return config;
}

// ---------------------------------------------------------------- oracles

std::map<std::string, int> brute_force_depths(const std::vector<std::string>& ids, const std::vector<Edge>& edges) {
  std::map<std::string, std::vector<std::string>> out;
  std::map<std::string, int> indegree;
  for (const auto& id : ids) indegree[id] = 0;
  for (const auto& [a, b] : edges) {
    out[a].push_back(b);
    ++indegree[b];
  }
  std::map<std::string, int> depth;
  for (const auto& id : ids) depth[id] = 0;
  std::function<void(const std::string&, int)> walk = [&](const std::string& v, int d) {
    depth[v] = std::max(depth[v], d);
    for (const auto& w : out[v]) walk(w, d + 1);
  };
  for (const auto& id : ids) {
    if (indegree[id] == 0) walk(id, 0);
  }
  return depth;
}

RunState interpret_trail(const std::vector<AuditRecord>& trail) {
  struct NodeView {
    std::string status = "pending";
    int attempts = 0;
    Json outputs = Json::object();
    std::int64_t first_run = -1;
    std::int64_t last_end = -1;
    std::string error;
  };
  std::map<std::string, NodeView> nodes;
  std::vector<std::pair<std::uint64_t, Json>> produced;  // (seq, outputs)
  std::vector<std::string> opened;
  std::set<std::string> closed;
  std::string run_id, spec_id, run_status = "pending";
  std::int64_t started = 0, finished = -1;

  auto ts_of = [](const Json& r) { return parse_rfc3339(r.at("ts").get<std::string>()).value().ms; };
  std::map<std::string, std::function<void(const Json&)>> handlers;
  handlers["run_start"] = [&](const Json& r) {
    run_id = r.at("run").get<std::string>();
    spec_id = r.at("payload").value("spec_id", std::string());
    run_status = "running";
    started = ts_of(r);
    for (const auto& n : r.at("payload").at("nodes")) nodes[n.get<std::string>()];
  };
  handlers["run_status"] = [&](const Json& r) { run_status = r.at("payload").at("status").get<std::string>(); };
  handlers["run_end"] = [&](const Json& r) {
    run_status = r.at("payload").at("status").get<std::string>();
    finished = ts_of(r);
  };
  handlers["ticket_open"] = [&](const Json& r) { opened.push_back(r.at("payload").at("ticket").get<std::string>()); };
  handlers["ticket_resolve"] = [&](const Json& r) { closed.insert(r.at("payload").at("ticket").get<std::string>()); };
  handlers["agent_call"] = [](const Json&) {};
  handlers["status"] = [&](const Json& r) {
    NodeView& n = nodes.at(r.at("node").get<std::string>());
    const Json& p = r.at("payload");
    const auto ts = ts_of(r);
    n.status = p.at("status").get<std::string>();
    if (n.status == "running") {
      n.attempts = p.at("attempt").get<int>();
      if (n.first_run == -1) n.first_run = ts;
      return;
    }
    if (n.status == "pending") return;
    n.last_end = ts;
    if (n.status == "succeeded" || n.status == "skipped") {
      n.outputs = p.at("outputs");
      produced.emplace_back(r.at("seq").get<std::uint64_t>(), n.outputs);
    } else {
      n.error = p.contains("error") ? p.at("error").get<std::string>() : std::string();
    }
  };

  for (const auto& rec : trail) {
    const Json doc = audit_to_json(rec);
    handlers.at(doc.at("kind").get<std::string>())(doc);
  }

  RunState s;
  s.run_id = run_id;
  s.spec_id = spec_id;
  s.status = *parse_run_status(run_status);
  s.started_ms = started;
  s.finished_ms = finished;
  for (const auto& t : opened) {
    if (!closed.contains(t)) s.open_tickets.push_back(t);
  }
  std::sort(produced.begin(), produced.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& [seq, outputs] : produced) {
    for (auto it = outputs.begin(); it != outputs.end(); ++it) s.outputs[it.key()] = it.value();
  }
  for (const auto& [id, v] : nodes) {
    NodeState& n = s.nodes[id];
    n.status = *parse_node_status(v.status);
    n.attempts = v.attempts;
    n.outputs = v.outputs.get<FieldMap>();
    n.started_ms = v.first_run;
    n.finished_ms = v.last_end;
    n.last_error = v.error;
  }
  return s;
}

namespace {

using EffectKey = std::pair<AgentKind, std::set<std::string>>;

std::multiset<EffectKey> effect_multiset(const std::map<std::string, EffectKey>& m) {
  std::multiset<EffectKey> out;
  for (const auto& [id, key] : m) out.insert(key);
  return out;
}

std::string describe(const std::multiset<EffectKey>& s) {
  std::ostringstream os;
  for (const auto& [kind, writes] : s) {
    os << to_string(kind) << "{";
    for (const auto& w : writes) os << w << ",";
    os << "} ";
  }
  return os.str();
}

// reach[a] = every node reachable from a through at least one edge
std::map<std::string, std::set<std::string>> reach_sets(const ProcessSpec& spec) {
  std::map<std::string, std::vector<std::string>> out;
  for (const auto& [a, b] : spec.edges) out[a].push_back(b);
  std::map<std::string, std::set<std::string>> reach;
  for (const auto& n : spec.nodes) {
    std::set<std::string>& seen = reach[n.id];
    std::vector<std::string> stack = out[n.id];
    while (!stack.empty()) {
      const std::string v = stack.back();
      stack.pop_back();
      if (!seen.insert(v).second) continue;
      for (const auto& w : out[v]) stack.push_back(w);
    }
  }
  return reach;
}

}  // namespace

std::string effectful_mismatch(const ProcessSpec& before, const ProcessSpec& after,
                               const std::vector<MergeRecord>& merges) {
  std::map<std::string, EffectKey> expected;
  for (const auto& n : before.nodes) {
    if (n.effectful) expected[n.id] = {n.agent_kind, n.writes};
  }
  for (const auto& rec : merges) {
    for (const auto& m : rec.members) expected.erase(m);
    if (rec.effectful) expected[rec.survivor] = {rec.agent_kind, rec.writes};
  }
  std::map<std::string, EffectKey> actual;
  for (const auto& n : after.nodes) {
    if (n.effectful) actual[n.id] = {n.agent_kind, n.writes};
  }
  const auto want = effect_multiset(expected);
  const auto got = effect_multiset(actual);
  if (want == got) return {};
  return "expected " + describe(want) + "got " + describe(got);
}

std::vector<Edge> broken_dependency_paths(const DependencyRelation& deps, const ProcessSpec& after,
                                          const std::vector<MergeRecord>& merges) {
  std::map<std::string, std::string> into;
  for (const auto& rec : merges) {
    for (const auto& m : rec.members) {
      for (auto& [from, to] : into) {
        if (to == m) to = rec.survivor;
      }
      into[m] = rec.survivor;
    }
  }
  auto mapped = [&](const std::string& id) {
    const auto it = into.find(id);
    return it == into.end() ? id : it->second;
  };
  const auto reach = reach_sets(after);
  std::vector<Edge> broken;
  for (const auto& [a, b] : deps.edges()) {
    const std::string x = mapped(a);
    const std::string y = mapped(b);
    if (x == y) continue;
    const auto it = reach.find(x);
    if (it == reach.end() || !it->second.contains(y)) broken.emplace_back(a, b);
  }
  return broken;
}

std::int64_t oracle_makespan(const ProcessSpec& spec) {
  std::map<std::string, int> layer;
  for (const auto& n : spec.nodes) layer[n.id] = 0;
  for (std::size_t round = 0; round < spec.nodes.size(); ++round) {
    for (const auto& [a, b] : spec.edges) layer[b] = std::max(layer[b], layer[a] + 1);
  }
  std::map<int, std::int64_t> longest;
  for (const auto& n : spec.nodes) {
    std::int64_t d = 0;
    if (const auto* f = std::get_if<FixedDuration>(&n.duration)) d = f->ms;
    else {
      const auto& ln = std::get<LogNormalDuration>(n.duration);
      d = std::llround(std::exp(ln.mu + ln.sigma * ln.sigma / 2.0));
    }
    longest[layer[n.id]] = std::max(longest[layer[n.id]], d);
  }
  std::int64_t total = 0;
  for (const auto& [l, d] : longest) total += d;
  return total;
}

bool same_stage_write_overlap(const ProcessSpec& spec) {
  std::vector<std::string> ids;
  for (const auto& n : spec.nodes) ids.push_back(n.id);
  const auto depth = brute_force_depths(ids, spec.edges);
  for (std::size_t i = 0; i < spec.nodes.size(); ++i) {
    for (std::size_t j = i + 1; j < spec.nodes.size(); ++j) {
      if (depth.at(spec.nodes[i].id) != depth.at(spec.nodes[j].id)) continue;
      for (const auto& w : spec.nodes[i].writes) {
        if (spec.nodes[j].writes.contains(w)) return true;
      }
    }
  }
  return false;
}

std::vector<std::string> dependency_violations(const std::vector<AuditRecord>& trail, const ProcessSpec& spec) {
  const auto reach = reach_sets(spec);
  std::map<std::string, std::string> status;
  std::vector<std::string> out;
  for (const auto& r : trail) {
    if (r.kind != "status") continue;
    const std::string s = r.payload.at("status").get<std::string>();
    if (s == "running") {
      for (const auto& [u, below] : reach) {
        if (!below.contains(r.node)) continue;
        const std::string su = status.count(u) ? status[u] : "pending";
        if (su != "succeeded" && su != "skipped") {
          out.push_back("seq " + std::to_string(r.seq) + ": " + r.node + " ran while " + u + " was " + su);
        }
      }
    }
    status[r.node] = s;
  }
  return out;
}

// ---------------------------------------------------------------- agents

AgentOutcome ScriptedAgent::invoke(const AgentTask& task) {
  Invocation inv;
  inv.run = task.run_id;
  inv.node = task.node->id;
  inv.writes = task.node->writes;
  inv.attempt = task.attempt;
  inv.enter = tick_.fetch_add(1);
  const std::uint64_t h = mix(mix(task.seed, hash_text(task.node->id)), static_cast<std::uint64_t>(task.attempt));
  if (max_yields_ > 0) {
    for (std::uint64_t k = (h >> 16) % static_cast<std::uint64_t>(max_yields_ + 1); k > 0; --k) std::this_thread::yield();
  }
  AgentOutcome outcome;
  if (static_cast<int>(h % 100) < fail_percent_) {
    outcome = AgentOutcome::failed("scripted failure");
  } else {
    FieldMap out;
    for (const auto& w : task.node->writes) out[w] = task.node->id + "#" + std::to_string(task.attempt);
    outcome = AgentOutcome::ok(std::move(out));
  }
  inv.exit = tick_.fetch_add(1);
  std::lock_guard lock(mu_);
  log_.push_back(std::move(inv));
  return outcome;
}

std::vector<Invocation> ScriptedAgent::log() const {
  std::lock_guard lock(mu_);
  return log_;
}

void ScriptedAgent::clear() {
  std::lock_guard lock(mu_);
  log_.clear();
}

AgentRegistry scripted_registry(const std::shared_ptr<ScriptedAgent>& agent) {
  AgentRegistry registry;
  for (const auto kind : kAllKinds) registry.bind(kind, agent, kind == AgentKind::api);
  return registry;
}

std::vector<std::pair<Invocation, Invocation>> write_races(const std::vector<Invocation>& log) {
  std::vector<std::pair<Invocation, Invocation>> out;
  for (std::size_t i = 0; i < log.size(); ++i) {
    for (std::size_t j = i + 1; j < log.size(); ++j) {
      const auto& a = log[i];
      const auto& b = log[j];
      if (a.run != b.run) continue;
      const bool overlap = a.enter < b.exit && b.enter < a.exit;
      if (!overlap) continue;
      const bool shared = std::any_of(a.writes.begin(), a.writes.end(), [&](const auto& w) { return b.writes.contains(w); });
      if (shared) out.emplace_back(a, b);
    }
  }
  return out;
}

std::vector<std::pair<Invocation, Invocation>> order_violations(const std::vector<Invocation>& log,
                                                                 const ProcessSpec& spec) {
  const auto reach = reach_sets(spec);
  std::vector<std::pair<Invocation, Invocation>> out;
  for (const auto& u : log) {
    const auto it = reach.find(u.node);
    if (it == reach.end()) continue;
    for (const auto& v : log) {
      if (u.run == v.run && it->second.contains(v.node) && !(u.exit < v.enter)) out.emplace_back(u, v);
    }
  }
  return out;
}

RunResult settle_randomly(Engine& engine, RunResult result, const ProcessSpec& spec, Gen& g) {
  std::map<std::string, int> retries;
  while (result.state.status == RunStatus::suspended && !result.state.open_tickets.empty()) {
    const std::string ticket = result.state.open_tickets.front();
    const auto it = std::find_if(result.tickets.begin(), result.tickets.end(),
                                 [&](const EscalationTicket& t) { return t.id == ticket; });
    const std::string node = it->node;
    const auto roll = g.below(100);
    HumanDecision decision;
    if (roll < 10) {
      decision.kind = DecisionKind::abort;
    } else if (roll < 55 && retries[node] < 3) {
      decision.kind = DecisionKind::retry;
      ++retries[node];
    } else {
      decision.kind = DecisionKind::skip_with_value;
      Json value = Json::object();
      for (const auto& w : spec.find(node)->writes) value[w] = "skipped:" + node;
      decision.value = value;
    }
    result = engine.resolve_escalation(ticket, decision, "property-test");
  }
  return result;
}

// ---------------------------------------------------------------- fixtures

WireRun wire_run(const Json& control) {
  const auto data = default_data_dir();
  WireRun w;
  w.spec = instantiate_template(extract_intent(std::string_view("transfer 100 USD from ACC-10001 to ACC-10002")),
                                TemplateLibrary::load(data / "templates"));
  w.inputs = bound_inputs(w.spec);
  if (!control.is_null()) w.inputs["_control"] = control;
  w.resources = load_service_resources(data);
  w.resources->bank = std::make_shared<MockBank>();
  w.resources->bank->open_account("ACC-10001", Decimal::from_int(5000));
  w.resources->bank->open_account("ACC-10002", Decimal::from_int(0));
  return w;
}

namespace {

const char* const kTransfer = "n10_execute_transfer";
const std::vector<std::string> kDownstream{"n11_generate_voucher", "n12_archive_voucher", "n13_notify_customer"};

struct Suspended {
  WireRun wire;
  std::unique_ptr<Engine> engine;
  RunResult result;
};

Suspended suspend_on_transfer() {
  Suspended s{wire_run(Json{{"fail_attempts", {{kTransfer, 3}}}}), nullptr, {}};
  s.engine = std::make_unique<Engine>(make_default_registry(s.wire.resources));
  s.result = s.engine->execute(build_execution_graph(s.wire.spec), s.wire.inputs, std::make_shared<SimulatedClock>(0), 7);
  return s;
}

bool ran(const RunResult& r, const std::string& node) {
  return std::any_of(r.trail.begin(), r.trail.end(), [&](const AuditRecord& a) {
    return a.kind == "status" && a.node == node && a.payload.at("status") == "running";
  });
}

}  // namespace

std::vector<std::string> check_escalation_conformance() {
  std::vector<std::string> broken;
  auto expect = [&](bool ok, const std::string& what) {
    if (!ok) broken.push_back(what);
  };

  // failure path up to the ticket
  {
    Suspended s = suspend_on_transfer();
    const RunResult& r = s.result;
    expect(r.state.status == RunStatus::suspended, "run suspends after the retries are exhausted");
    expect(r.state.nodes.at(kTransfer).status == NodeStatus::escalated, "transfer node is escalated");
    expect(r.state.nodes.at(kTransfer).attempts == 3, "one attempt plus two retries");
    int calls = 0;
    for (const auto& a : r.trail) {
      if (a.kind == "agent_call" && a.node == kTransfer) {
        ++calls;
        expect(a.payload.at("outcome") == "failed", "every transfer attempt fails");
      }
    }
    expect(calls == 3, "exactly three transfer attempts");
    expect(r.tickets.size() == 1 && r.state.open_tickets.size() == 1, "exactly one escalation ticket");
    expect(!r.tickets.empty() && r.tickets.front().node == kTransfer, "ticket names the transfer node");
    for (const auto& d : kDownstream) {
      expect(r.state.nodes.at(d).status == NodeStatus::pending && !ran(r, d), d + " is held back");
    }
  }

  // retry on a healed agent
  {
    Suspended s = suspend_on_transfer();
    const auto ticket = s.result.tickets.front().id;
    const RunResult r = s.engine->resolve_escalation(ticket, {DecisionKind::retry, Json::object()}, "reviewer");
    expect(r.state.status == RunStatus::succeeded, "retry: run completes");
    expect(r.state.nodes.at(kTransfer).status == NodeStatus::succeeded, "retry: transfer succeeds");
    expect(r.state.nodes.at(kTransfer).attempts == 4, "retry: fourth attempt");
    for (const auto& d : kDownstream) expect(r.state.nodes.at(d).status == NodeStatus::succeeded, "retry: " + d + " runs");
    expect(s.wire.resources->bank->balance("ACC-10001") == Decimal::from_int(4900), "retry: funds moved once");
    expect(r.tickets.front().resolved && r.tickets.front().decision == DecisionKind::retry, "retry: decision recorded");
    try {
      s.engine->resolve_escalation(ticket, {DecisionKind::abort, Json::object()}, "reviewer");
      broken.push_back("a second decision on the same ticket is rejected");
    } catch (const Error& e) {
      expect(e.code() == Errc::AlreadyResolved, "a second decision fails with AlreadyResolved");
    }
  }

  // skip with a value the downstream nodes read
  {
    Suspended s = suspend_on_transfer();
    const auto ticket = s.result.tickets.front().id;
    try {
      s.engine->resolve_escalation(ticket, {DecisionKind::skip_with_value, Json{{"not.a.write", 1}}}, "reviewer");
      broken.push_back("skip value outside the node's writes is rejected");
    } catch (const Error& e) {
      expect(e.code() == Errc::InvalidDecision, "skip value outside the node's writes fails with InvalidDecision");
    }
    const RunResult r = s.engine->resolve_escalation(
        ticket, {DecisionKind::skip_with_value, Json{{"ledger.txn_id", "TX-MANUAL"}}}, "reviewer");
    expect(r.state.status == RunStatus::succeeded, "skip: run completes");
    expect(r.state.nodes.at(kTransfer).status == NodeStatus::skipped, "skip: transfer marked skipped");
    expect(r.state.outputs.count("ledger.txn_id") && r.state.outputs.at("ledger.txn_id") == "TX-MANUAL",
           "skip: injected value reaches the aggregate");
    for (const auto& d : kDownstream) expect(r.state.nodes.at(d).status == NodeStatus::succeeded, "skip: " + d + " runs");
    expect(s.wire.resources->bank->balance("ACC-10001") == Decimal::from_int(5000), "skip: no funds moved");
  }

  // abort
  {
    Suspended s = suspend_on_transfer();
    const RunResult r =
        s.engine->resolve_escalation(s.result.tickets.front().id, {DecisionKind::abort, Json::object()}, "reviewer");
    expect(r.state.status == RunStatus::aborted, "abort: run aborted");
    expect(r.state.finished_ms >= 0, "abort: run has an end time");
    expect(!r.trail.empty() && r.trail.back().kind == "run_end" && r.trail.back().payload.at("status") == "aborted",
           "abort: trail ends with run_end aborted");
    for (const auto& d : kDownstream) {
      expect(r.state.nodes.at(d).status == NodeStatus::pending && !ran(r, d), "abort: " + d + " stays pending");
    }
    expect(s.wire.resources->bank->balance("ACC-10001") == Decimal::from_int(5000), "abort: no funds moved");
  }

  {
    Suspended s = suspend_on_transfer();
    try {
      s.engine->resolve_escalation("tkt-999999", {DecisionKind::retry, Json::object()}, "reviewer");
      broken.push_back("unknown ticket is rejected");
    } catch (const Error& e) {
      expect(e.code() == Errc::TicketNotFound, "unknown ticket fails with TicketNotFound");
    }
  }
  return broken;
}

}  // namespace gbpa::testing
