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

#include "gbpa/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>

#include "gbpa/error.hpp"
#include "gbpa/graph.hpp"

namespace gbpa {

std::string_view to_string(HazardKind kind) noexcept {
  switch (kind) {
    case HazardKind::raw: return "raw";
    case HazardKind::war: return "war";
    case HazardKind::waw: return "waw";
    case HazardKind::constraint: return "constraint";
  }
  return "raw";
}

std::vector<Edge> DependencyRelation::edges() const {
  std::vector<Edge> out;
  for (const auto& d : pairs) out.emplace_back(d.from, d.to);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<Edge> DependencyRelation::data_edges() const {
  std::vector<Edge> out;
  for (const auto& d : pairs) {
    if (d.kind != HazardKind::constraint) out.emplace_back(d.from, d.to);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// ---------------------------------------------------------------- inference

namespace {

std::vector<std::string> common(const std::set<std::string>& a, const std::set<std::string>& b) {
  std::vector<std::string> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

std::vector<Edge> all_order_edges(const ProcessSpec& spec) {
  std::vector<Edge> edges = spec.edges;
  const auto constraints = spec.ordering_constraints();
  edges.insert(edges.end(), constraints.begin(), constraints.end());
  return edges;
}

/// Nodes in the spec's deterministic topological order.
std::vector<const NodeSpec*> ordered_nodes(const ProcessSpec& spec) {
  std::vector<std::string> ids;
  for (const auto& n : spec.nodes) ids.push_back(n.id);
  const Dag dag(ids, all_order_edges(spec));
  const auto order = dag.topo_order();
  if (!order) {
    const auto cycle = dag.find_cycle();
    throw Error(Errc::CycleDetected, cycle ? (*cycle)[0] : "", "edges and ordering constraints disagree");
  }
  std::vector<const NodeSpec*> out;
  for (const auto v : *order) out.push_back(spec.find(dag.ids()[v]));
  return out;
}

void hazards_from(const NodeSpec& a, const NodeSpec& b, std::vector<Dependency>& out) {
  for (auto& f : common(a.writes, b.reads)) out.push_back({a.id, b.id, HazardKind::raw, std::move(f)});
  for (auto& f : common(a.reads, b.writes)) out.push_back({a.id, b.id, HazardKind::war, std::move(f)});
  for (auto& f : common(a.writes, b.writes)) out.push_back({a.id, b.id, HazardKind::waw, std::move(f)});
}

DependencyRelation finish(const ProcessSpec& spec, std::vector<Dependency> pairs) {
  for (const auto& [from, to] : spec.ordering_constraints()) {
    pairs.push_back({from, to, HazardKind::constraint, "constraint"});
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  return DependencyRelation{std::move(pairs)};
}

}  // namespace

DependencyRelation infer_dependencies_serial(const ProcessSpec& spec) {
  const auto order = ordered_nodes(spec);
  std::vector<Dependency> pairs;
  for (std::size_t i = 0; i < order.size(); ++i) {
    for (std::size_t j = i + 1; j < order.size(); ++j) hazards_from(*order[i], *order[j], pairs);
  }
  return finish(spec, std::move(pairs));
}

DependencyRelation infer_dependencies(const ProcessSpec& spec, const EventLog* log, const CorrelationKeys& keys,
                                      std::vector<MinedDependency>* mined) {
  if (log && keys.empty()) throw Error(Errc::CorrelationKeyMissing, spec.id, "log mining needs correlation keys");
  const auto order = ordered_nodes(spec);
  const auto n = static_cast<std::int64_t>(order.size());
  std::vector<std::vector<Dependency>> rows(order.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = i + 1; j < n; ++j) {
      hazards_from(*order[static_cast<std::size_t>(i)], *order[static_cast<std::size_t>(j)],
                   rows[static_cast<std::size_t>(i)]);
    }
  }
  std::vector<Dependency> pairs;
  for (auto& row : rows) std::move(row.begin(), row.end(), std::back_inserter(pairs));
  DependencyRelation rel = finish(spec, std::move(pairs));

  if (log && mined) {
    std::map<std::string, std::size_t> position;
    for (std::size_t i = 0; i < order.size(); ++i) position[order[i]->id] = i;
    std::set<std::pair<std::string, std::string>> observed;  // (node, field)
    for (const auto& [node, how] : keys) {
      const NodeSpec* spec_node = spec.find(node);
      if (!spec_node) throw Error(Errc::CorrelationKeyMissing, node, "correlation key for unknown node");
      for (const auto& e : log->events) {
        if (e.how == how && !spec_node->reads.contains(e.what) && !spec_node->writes.contains(e.what)) {
          observed.emplace(node, e.what);
        }
      }
    }
    std::set<std::tuple<std::string, std::string, std::string>> found;
    for (const auto& [node, field] : observed) {
      for (const auto& other : spec.nodes) {
        if (other.id == node || !other.writes.contains(field)) continue;
        const bool other_first = position.at(other.id) < position.at(node);
        found.emplace(other_first ? other.id : node, other_first ? node : other.id, field);
      }
    }
    for (const auto& [from, to, field] : found) mined->push_back({from, to, field});
  }
  return rel;
}

// ---------------------------------------------------------------- collapsing

namespace {

std::int64_t mean_duration(const DurationModel& model) {
  if (const auto* f = std::get_if<FixedDuration>(&model)) return f->ms;
  const auto& ln = std::get<LogNormalDuration>(model);
  return std::llround(std::exp(ln.mu + ln.sigma * ln.sigma / 2.0));
}

std::vector<Edge> repoint(const std::vector<Edge>& edges, const std::set<std::string>& members, const std::string& into) {
  std::vector<Edge> out;
  for (auto [from, to] : edges) {
    if (members.contains(from)) from = into;
    if (members.contains(to)) to = into;
    if (from != to) out.emplace_back(std::move(from), std::move(to));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Json constraints_json(const std::vector<Edge>& constraints) {
  Json out = Json::array();
  for (const auto& [a, b] : constraints) out.push_back({a, b});
  return out;
}

/// Replaces `members` with `replacement`; nullopt when the result would be cyclic.
std::optional<ProcessSpec> collapse(const ProcessSpec& spec, const std::set<std::string>& members,
                                    NodeSpec replacement) {
  ProcessSpec out = spec;
  out.nodes.clear();
  bool placed = false;
  for (const auto& n : spec.nodes) {
    if (!members.contains(n.id)) {
      out.nodes.push_back(n);
    } else if (!placed) {
      out.nodes.push_back(replacement);
      placed = true;
    }
  }
  out.edges = repoint(spec.edges, members, replacement.id);
  const auto constraints = repoint(spec.ordering_constraints(), members, replacement.id);
  if (!constraints.empty() || out.metadata.contains("ordering_constraints")) {
    out.metadata["ordering_constraints"] = constraints_json(constraints);
  }
  for (const auto& m : members) {
    if (m != replacement.id) out.fallback.erase(m);
  }
  std::vector<std::string> ids;
  for (const auto& n : out.nodes) ids.push_back(n.id);
  if (Dag(ids, all_order_edges(out)).find_cycle()) return std::nullopt;
  return out;
}

}  // namespace

MergeOutcome merge_redundant(const ProcessSpec& spec) {
  std::map<std::tuple<std::string, AgentKind, std::set<std::string>>, std::vector<std::string>> groups;
  for (const auto& n : spec.nodes) {
    if (n.merge_key) groups[{*n.merge_key, n.agent_kind, n.reads}].push_back(n.id);
  }
  std::vector<std::vector<std::string>> ordered;
  for (auto& [key, ids] : groups) {
    if (ids.size() < 2) continue;
    std::sort(ids.begin(), ids.end());
    ordered.push_back(ids);
  }
  std::sort(ordered.begin(), ordered.end());

  MergeOutcome result{spec, {}, {}};
  for (const auto& ids : ordered) {
    NodeSpec survivor = *result.spec.find(ids.front());
    for (std::size_t i = 1; i < ids.size(); ++i) {
      const NodeSpec& other = *result.spec.find(ids[i]);
      survivor.writes.insert(other.writes.begin(), other.writes.end());
      survivor.effectful = survivor.effectful || other.effectful;
      survivor.risk_control = survivor.risk_control || other.risk_control;
    }
    const std::set<std::string> members(ids.begin(), ids.end());
    auto merged = collapse(result.spec, members, survivor);
    if (!merged) {
      result.skipped.push_back({ids, "merging would create a cycle"});
      continue;
    }
    result.spec = std::move(*merged);
    result.records.push_back({survivor.id, ids, "merge_key", survivor.agent_kind, survivor.writes, survivor.effectful,
                              survivor.risk_control});
  }
  return result;
}

ProcessSpec parallelize(const ProcessSpec& spec, const DependencyRelation& deps) {
  ProcessSpec out = spec;
  std::vector<std::string> ids;
  for (const auto& n : spec.nodes) ids.push_back(n.id);
  out.edges = Dag(ids, deps.edges()).transitive_reduction();
  return out;
}

// ---------------------------------------------------------------- risk controls

namespace {

NodeSpec node_from_json(const Json& doc) {
  return parse_spec(Json{{"id", "checkpoint"}, {"nodes", Json::array({doc})}}).nodes.front();
}

bool any_in(const Json& list, const std::set<std::string>& fields) {
  return std::any_of(list.begin(), list.end(), [&](const Json& f) { return fields.contains(f.get<std::string>()); });
}

std::string expand_id(std::string id, const std::string& anchor) {
  for (auto pos = id.find("{{node}}"); pos != std::string::npos; pos = id.find("{{node}}")) {
    id.replace(pos, 8, anchor);
  }
  return id;
}

}  // namespace

bool trigger_matches(const Json& trigger, const NodeSpec& node) {
  if (trigger.contains("effectful") && trigger.at("effectful").get<bool>() != node.effectful) return false;
  if (trigger.contains("risk_control") && trigger.at("risk_control").get<bool>() != node.risk_control) return false;
  if (trigger.contains("agent_kind") && trigger.at("agent_kind").get<std::string>() != to_string(node.agent_kind)) {
    return false;
  }
  if (trigger.contains("ids")) {
    const auto& ids = trigger.at("ids");
    if (std::find(ids.begin(), ids.end(), Json(node.id)) == ids.end()) return false;
  }
  if (trigger.contains("writes_any") && !any_in(trigger.at("writes_any"), node.writes)) return false;
  if (trigger.contains("reads_any") && !any_in(trigger.at("reads_any"), node.reads)) return false;
  return true;
}

RiskPolicy RiskPolicy::from_json(const Json& doc) {
  RiskPolicy policy;
  for (const auto& r : doc.value("rules", Json::array())) {
    RiskRule rule;
    rule.id = r.at("id").get<std::string>();
    rule.trigger = r.value("trigger", Json::object());
    const auto placement = r.value("placement", std::string("before"));
    if (placement != "before" && placement != "after") throw Error(Errc::InvalidSpec, rule.id, "placement");
    rule.placement = placement == "after" ? RiskRule::Placement::after : RiskRule::Placement::before;
    rule.checkpoint = r.at("checkpoint");
    policy.rules.push_back(std::move(rule));
  }
  return policy;
}

Json RiskPolicy::to_json() const {
  Json rules_doc = Json::array();
  for (const auto& r : rules) {
    rules_doc.push_back({{"id", r.id},
                         {"trigger", r.trigger},
                         {"placement", r.placement == RiskRule::Placement::after ? "after" : "before"},
                         {"checkpoint", r.checkpoint}});
  }
  return Json{{"rules", rules_doc}};
}

ProcessSpec insert_risk_controls(const ProcessSpec& spec, const RiskPolicy& policy) {
  ProcessSpec out = spec;
  std::vector<Edge> constraints = spec.ordering_constraints();
  std::set<Edge> removed;
  std::vector<Edge> added;
  for (const auto& rule : policy.rules) {
    std::vector<const NodeSpec*> anchors;
    for (const auto& n : spec.nodes) {
      if (trigger_matches(rule.trigger, n)) anchors.push_back(&n);
    }
    for (const NodeSpec* anchor : anchors) {
      Json doc = rule.checkpoint;
      const auto raw_id = doc.at("id").get<std::string>();
      if (anchors.size() > 1 && raw_id.find("{{node}}") == std::string::npos) {
        throw Error(Errc::InvalidSpec, rule.id, "checkpoint id needs {{node}} when several nodes match");
      }
      doc["id"] = expand_id(raw_id, anchor->id);
      NodeSpec checkpoint = node_from_json(doc);
      checkpoint.risk_control = true;
      if (out.find(checkpoint.id)) throw Error(Errc::DuplicateNodeId, checkpoint.id);
      std::vector<Edge> splice;
      if (rule.placement == RiskRule::Placement::before) {
        for (const auto& e : spec.edges) {
          if (e.second != anchor->id) continue;
          removed.insert(e);
          splice.emplace_back(e.first, checkpoint.id);
        }
        splice.emplace_back(checkpoint.id, anchor->id);
      } else {
        for (const auto& e : spec.edges) {
          if (e.first != anchor->id) continue;
          removed.insert(e);
          splice.emplace_back(checkpoint.id, e.second);
        }
        splice.emplace_back(anchor->id, checkpoint.id);
      }
      added.insert(added.end(), splice.begin(), splice.end());
      constraints.insert(constraints.end(), splice.begin(), splice.end());
      out.nodes.push_back(std::move(checkpoint));
    }
  }
  if (added.empty()) return out;
  out.edges.clear();
  for (const auto& e : spec.edges) {
    if (!removed.contains(e)) out.edges.push_back(e);
  }
  out.edges.insert(out.edges.end(), added.begin(), added.end());
  std::sort(out.edges.begin(), out.edges.end());
  out.edges.erase(std::unique(out.edges.begin(), out.edges.end()), out.edges.end());
  std::sort(constraints.begin(), constraints.end());
  constraints.erase(std::unique(constraints.begin(), constraints.end()), constraints.end());
  out.metadata["ordering_constraints"] = constraints_json(constraints);
  validate_spec(out);
  return out;
}

// ---------------------------------------------------------------- consolidation

ConsolidationGroup ConsolidationGroup::from_json(const Json& doc) {
  ConsolidationGroup g;
  g.id = doc.at("id").get<std::string>();
  g.members = doc.at("members").get<std::vector<std::string>>();
  const auto kind = parse_agent_kind(doc.at("agent_kind").get<std::string>());
  if (!kind) throw Error(Errc::UnknownAgentKind, doc.at("agent_kind").get<std::string>());
  g.agent_kind = *kind;
  g.params = doc.value("params", Json::object());
  g.step_params = doc.value("step_params", Json::object()).get<std::map<std::string, Json>>();
  if (doc.contains("risk_control")) g.risk_control = doc.at("risk_control").get<bool>();
  return g;
}

MergeOutcome consolidate(const ProcessSpec& spec, const std::vector<ConsolidationGroup>& groups) {
  MergeOutcome result{spec, {}, {}};
  for (const auto& g : groups) {
    NodeSpec node;
    node.id = g.id;
    node.agent_kind = g.agent_kind;
    node.params = g.params;
    std::set<std::string> reads;
    std::int64_t total = 0;
    bool risk = false;
    for (const auto& m : g.members) {
      const NodeSpec* member = result.spec.find(m);
      if (!member) throw Error(Errc::InvalidSpec, g.id, "unknown consolidation member " + m);
      reads.insert(member->reads.begin(), member->reads.end());
      node.writes.insert(member->writes.begin(), member->writes.end());
      node.effectful = node.effectful || member->effectful;
      risk = risk || member->risk_control;
      total += mean_duration(member->duration);
    }
    for (const auto& f : reads) {
      if (!node.writes.contains(f)) node.reads.insert(f);
    }
    if (node.params.empty()) {
      Json steps = Json::array();
      for (const NodeSpec* member : ordered_nodes(result.spec)) {
        if (std::find(g.members.begin(), g.members.end(), member->id) == g.members.end()) continue;
        if (member->params.contains("steps")) {
          for (const auto& step : member->params.at("steps")) steps.push_back(step);
          continue;
        }
        const auto custom = g.step_params.find(member->id);
        steps.push_back({{"id", member->id},
                         {"kind", to_string(member->agent_kind)},
                         {"params", custom != g.step_params.end() ? custom->second : member->params},
                         {"writes", member->writes}});
      }
      node.params = Json{{"steps", steps}};
    }
    node.risk_control = g.risk_control.value_or(risk);
    node.duration = FixedDuration{total};
    std::vector<std::string> members = g.members;
    std::sort(members.begin(), members.end());
    const std::set<std::string> member_set(members.begin(), members.end());
    if (result.spec.find(g.id) && !member_set.contains(g.id)) throw Error(Errc::DuplicateNodeId, g.id);
    auto merged = collapse(result.spec, member_set, node);
    if (!merged) {
      result.skipped.push_back({members, "consolidating " + g.id + " would create a cycle"});
      continue;
    }
    result.spec = std::move(*merged);
    result.records.push_back(
        {node.id, members, "consolidation", node.agent_kind, node.writes, node.effectful, node.risk_control});
  }
  return result;
}

// ---------------------------------------------------------------- timing

ProcessSpec with_durations(const ProcessSpec& spec, const DurationTable& table) {
  ProcessSpec out = spec;
  for (auto& n : out.nodes) {
    const auto it = table.find(n.id);
    if (it == table.end()) throw Error(Errc::MissingDuration, n.id);
    n.duration = FixedDuration{it->second};
  }
  return out;
}

std::int64_t estimate_makespan(const ProcessSpec& spec) {
  const ExecutionGraph g = build_execution_graph(spec);
  std::int64_t total = 0;
  for (const auto& stage : g.stages) {
    std::int64_t longest = 0;
    for (const auto& id : stage) longest = std::max(longest, mean_duration(spec.find(id)->duration));
    total += longest;
  }
  return total;
}

std::int64_t inter_node_wait(const ProcessSpec& spec) {
  const ExecutionGraph g = build_execution_graph(spec);
  std::map<std::string, std::int64_t> start;
  std::map<std::string, std::int64_t> finish;
  std::int64_t t = 0;
  for (const auto& stage : g.stages) {
    std::int64_t longest = 0;
    for (const auto& id : stage) {
      const auto d = mean_duration(spec.find(id)->duration);
      start[id] = t;
      finish[id] = t + d;
      longest = std::max(longest, d);
    }
    t += longest;
  }
  std::map<std::string, std::int64_t> ready;
  for (const auto& [from, to] : infer_dependencies_serial(spec).data_edges()) {
    ready[to] = std::max(ready[to], finish.at(from));
  }
  std::int64_t wait = 0;
  for (const auto& [id, s] : start) wait += s - ready[id];
  return wait;
}

// ---------------------------------------------------------------- report

namespace {

Json ratio_json(const std::optional<Ratio>& r) {
  return r ? Json{{"num", r->num}, {"den", r->den}} : Json(nullptr);
}

std::optional<Ratio> ratio_from(const Json& doc) {
  if (doc.is_null()) return std::nullopt;
  return Ratio{doc.at("num").get<std::int64_t>(), doc.at("den").get<std::int64_t>()};
}

}  // namespace

Json OptimizationReport::to_json() const {
  return Json{{"end_to_end_before_ms", end_to_end_before},
              {"end_to_end_after_ms", end_to_end_after},
              {"node_count_before", node_count_before},
              {"node_count_after", node_count_after},
              {"risk_stage_count_before", risk_stage_count_before},
              {"risk_stage_count_after", risk_stage_count_after},
              {"parallel_cluster_before", parallel_cluster_before},
              {"parallel_cluster_after", parallel_cluster_after},
              {"inter_node_wait_before_ms", inter_node_wait_before},
              {"inter_node_wait_after_ms", inter_node_wait_after},
              {"error_rate_before", ratio_json(error_rate_before)},
              {"error_rate_after", ratio_json(error_rate_after)}};
}

OptimizationReport OptimizationReport::from_json(const Json& doc) {
  OptimizationReport r;
  r.end_to_end_before = doc.at("end_to_end_before_ms").get<std::int64_t>();
  r.end_to_end_after = doc.at("end_to_end_after_ms").get<std::int64_t>();
  r.node_count_before = doc.at("node_count_before").get<int>();
  r.node_count_after = doc.at("node_count_after").get<int>();
  r.risk_stage_count_before = doc.at("risk_stage_count_before").get<int>();
  r.risk_stage_count_after = doc.at("risk_stage_count_after").get<int>();
  r.parallel_cluster_before = doc.at("parallel_cluster_before").get<int>();
  r.parallel_cluster_after = doc.at("parallel_cluster_after").get<int>();
  r.inter_node_wait_before = doc.at("inter_node_wait_before_ms").get<std::int64_t>();
  r.inter_node_wait_after = doc.at("inter_node_wait_after_ms").get<std::int64_t>();
  r.error_rate_before = ratio_from(doc.value("error_rate_before", Json()));
  r.error_rate_after = ratio_from(doc.value("error_rate_after", Json()));
  return r;
}

OptimizationReport measure(const ProcessSpec& before, const ProcessSpec& after) {
  OptimizationReport r;
  r.end_to_end_before = estimate_makespan(before);
  r.end_to_end_after = estimate_makespan(after);
  r.node_count_before = static_cast<int>(before.nodes.size());
  r.node_count_after = static_cast<int>(after.nodes.size());
  r.risk_stage_count_before = risk_node_count(before);
  r.risk_stage_count_after = risk_node_count(after);
  r.parallel_cluster_before = parallel_cluster_count(build_execution_graph(before));
  r.parallel_cluster_after = parallel_cluster_count(build_execution_graph(after));
  r.inter_node_wait_before = inter_node_wait(before);
  r.inter_node_wait_after = inter_node_wait(after);
  return r;
}

OptimizeConfig OptimizeConfig::from_json(const Json& doc) {
  OptimizeConfig c;
  c.risk_policy = RiskPolicy::from_json(doc.value("risk_policy", Json::object()));
  for (const auto& g : doc.value("consolidation", Json::array())) c.consolidation.push_back(ConsolidationGroup::from_json(g));
  c.durations = doc.value("durations", Json::object()).get<DurationTable>();
  c.optimized_durations = doc.value("optimized_durations", Json::object()).get<DurationTable>();
  c.correlation_keys = doc.value("correlation_keys", Json::object()).get<CorrelationKeys>();
  return c;
}

OptimizeResult optimize(const ProcessSpec& spec, const EventLog* log, const OptimizeConfig& config) {
  OptimizeResult result;
  result.baseline = config.durations.empty() ? spec : with_durations(spec, config.durations);

  result.deps = infer_dependencies(result.baseline, log, config.correlation_keys, &result.mined);
  ProcessSpec ordered = result.baseline;
  ordered.edges = result.deps.edges();

  MergeOutcome merged = merge_redundant(ordered);
  result.merges = merged.records;
  result.skipped = merged.skipped;

  ProcessSpec parallel = parallelize(merged.spec, infer_dependencies(merged.spec));
  ProcessSpec guarded = insert_risk_controls(parallel, config.risk_policy);

  MergeOutcome consolidated = consolidate(guarded, config.consolidation);
  result.merges.insert(result.merges.end(), consolidated.records.begin(), consolidated.records.end());
  result.skipped.insert(result.skipped.end(), consolidated.skipped.begin(), consolidated.skipped.end());

  ProcessSpec out = std::move(consolidated.spec);
  std::vector<std::string> ids;
  for (const auto& n : out.nodes) ids.push_back(n.id);
  out.edges = Dag(ids, out.edges).transitive_reduction();
  for (auto& n : out.nodes) {
    if (const auto it = config.optimized_durations.find(n.id); it != config.optimized_durations.end()) {
      n.duration = FixedDuration{it->second};
    }
  }
  validate_spec(out);
  result.spec = std::move(out);
  result.report = measure(result.baseline, result.spec);
  return result;
}

}  // namespace gbpa
