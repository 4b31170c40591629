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

#include "gbpa/sim_harness.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include "gbpa/error.hpp"
#include "gbpa/graph.hpp"

#ifndef GBPA_DATA_DIR
#define GBPA_DATA_DIR "data"
#endif

namespace gbpa {

namespace fs = std::filesystem;

namespace {

fs::path asset(const Scenario& s, const Json& rel) { return s.data_dir / rel.get<std::string>(); }

fs::path require_file(const fs::path& path, const std::string& scenario) {
  if (!fs::exists(path)) throw Error(Errc::ScenarioAssetsMissing, scenario, "missing " + path.string());
  return path;
}

Json read_json(const fs::path& path, const std::string& scenario) {
  std::ifstream in(require_file(path, scenario));
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw Error(Errc::ScenarioAssetsMissing, scenario, path.string() + ": " + e.what());
  }
}

Decimal decimal_or_throw(const Json& v, const std::string& what) {
  const auto d = Decimal::parse(v.is_string() ? v.get<std::string>() : v.dump());
  if (!d) throw Error(Errc::BadQuantity, what);
  return *d;
}

std::int64_t mean_of(const std::vector<std::int64_t>& xs) {
  if (xs.empty()) return 0;
  std::int64_t sum = 0;
  for (const auto x : xs) sum += x;
  const auto n = static_cast<std::int64_t>(xs.size());
  return (2 * sum + n) / (2 * n);
}

Intent intent_for_row(const Scenario& s, const RawRecord& row) {
  Json form = Json::object();
  for (const auto& [entity, column] : s.config.at("run_form").items()) {
    if (entity == "goal") {
      form["goal"] = column;
      continue;
    }
    const auto it = row.find(column.get<std::string>());
    if (it != row.end()) form[entity] = it->second;
  }
  return extract_intent(form);
}

std::optional<std::string> source_account(const Scenario& s, const RawRecord& row) {
  const Json& form = s.config.at("run_form");
  if (!form.contains("src")) return std::nullopt;
  const auto it = row.find(form.at("src").get<std::string>());
  if (it == row.end()) return std::nullopt;
  return it->second;
}

std::int64_t row_start_ms(const RawRecord& row) {
  const auto it = row.find("ts");
  if (it == row.end()) return 0;
  const auto ts = parse_rfc3339(it->second);
  return ts ? ts->ms : 0;
}

/// The scripted reviewer approves: every escalated node is skipped with all
/// its writes set to true.
RunResult settle(Engine& engine, RunResult result, const ProcessSpec& spec, int& escalations) {
  while (result.state.status == RunStatus::suspended) {
    const auto open = result.state.open_tickets;
    for (const auto& ticket_id : open) {
      const auto ticket = std::find_if(result.tickets.begin(), result.tickets.end(),
                                       [&](const EscalationTicket& t) { return t.id == ticket_id; });
      HumanDecision decision{DecisionKind::skip_with_value, Json::object()};
      for (const auto& w : spec.find(ticket->node)->writes) decision.value[w] = true;
      result = engine.resolve_escalation(ticket_id, decision, "scripted-reviewer", "approved in simulation");
      ++escalations;
    }
  }
  return result;
}

std::shared_ptr<AgentResources> fresh_resources(const Scenario& s) {
  auto res = std::make_shared<AgentResources>(*s.resources);
  res->bank = std::make_shared<MockBank>();
  for (const auto& [id, balance] : s.accounts) res->bank->open_account(id, balance);
  return res;
}

std::int64_t approval_ms(const std::vector<AuditRecord>& trail, const std::vector<std::string>& nodes) {
  std::int64_t total = 0;
  for (const auto& r : trail) {
    if (r.kind == "agent_call" && std::find(nodes.begin(), nodes.end(), r.node) != nodes.end()) {
      total += r.payload.at("duration_ms").get<std::int64_t>();
    }
  }
  return total;
}

VariantResult run_variant(const Scenario& s, const std::string& variant, const ProcessSpec& spec,
                          const std::vector<std::size_t>& sample, const std::vector<FieldMap>& inputs,
                          std::uint64_t seed) {
  VariantResult v;
  v.variant = variant;
  v.spec = spec;
  auto res = fresh_resources(s);
  if (s.default_balance) {
    for (const auto idx : sample) {
      if (const auto acct = source_account(s, s.rows[idx]); acct && !res->bank->has_account(*acct)) {
        res->bank->open_account(*acct, *s.default_balance);
      }
    }
  }
  Engine engine(make_default_registry(res));
  const ExecutionGraph graph = build_execution_graph(spec);
  const auto approvals = s.approval_nodes.find(variant);
  ExecuteOptions options;
  options.embed_spec = false;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    auto clock = std::make_shared<SimulatedClock>(row_start_ms(s.rows[sample[i]]));
    RunResult run = engine.execute(graph, inputs[i], clock, seed + sample[i], options);
    run = settle(engine, std::move(run), spec, v.escalations);
    v.makespans.push_back(run.elapsed_ms);
    v.waits.push_back(trail_wait(run.trail, spec));
    if (approvals != s.approval_nodes.end()) v.approvals.push_back(approval_ms(run.trail, approvals->second));
    for (const auto& r : run.trail) {
      if (r.kind == "agent_call") v.busy_ms[r.node] += r.payload.at("duration_ms").get<std::int64_t>();
    }
    if (run.state.status == RunStatus::succeeded) ++v.succeeded;
    if (run.state.status == RunStatus::aborted) ++v.aborted;
    v.trail.insert(v.trail.end(), run.trail.begin(), run.trail.end());
  }
  return v;
}

// Runs every corpus claim through one variant; returns paid flags in corpus order.
std::vector<bool> screen(const Scenario& s, const ProcessSpec& spec, const std::vector<FieldMap>& claims,
                         std::uint64_t seed) {
  auto res = fresh_resources(s);
  Engine engine(make_default_registry(res));
  const ExecutionGraph graph = build_execution_graph(spec);
  ExecuteOptions options;
  options.embed_spec = false;
  int escalations = 0;
  std::vector<bool> paid;
  paid.reserve(claims.size());
  for (std::size_t i = 0; i < claims.size(); ++i) {
    RunResult run = engine.execute(graph, claims[i], std::make_shared<SimulatedClock>(0), seed + i, options);
    run = settle(engine, std::move(run), spec, escalations);
    const auto it = run.state.outputs.find(s.defects->paid_field);
    paid.push_back(it != run.state.outputs.end() && !it->second.is_null());
  }
  return paid;
}

std::string trim_decimals(std::int64_t hundredths) {
  std::string out = std::to_string(hundredths / 100);
  const auto frac = hundredths % 100;
  if (frac != 0) {
    char buf[8];
    std::snprintf(buf, sizeof buf, ".%02lld", static_cast<long long>(frac));
    std::string f(buf);
    while (f.back() == '0') f.pop_back();
    out += f;
  }
  return out;
}

// ms / unit to two decimals, half away from zero (ms >= 0).
std::int64_t hundredths(std::int64_t ms, std::int64_t unit) { return (200 * ms + unit) / (2 * unit); }

std::string signed_delta(std::int64_t d) {
  if (d > 0) return "+" + std::to_string(d);
  return std::to_string(d);
}

std::string nodes_cell(int nodes, int clusters) {
  std::string s = std::to_string(nodes);
  if (clusters > 0) s += " (" + std::to_string(clusters) + (clusters == 1 ? " group" : " groups") + " in parallel)";
  return s;
}

std::optional<Ratio> ratio_of(const Json& doc) {
  if (doc.is_null()) return std::nullopt;
  return Ratio{doc.at("num").get<std::int64_t>(), doc.at("den").get<std::int64_t>()};
}

std::string format_name(TimeFormat f) { return f == TimeFormat::minutes ? "minutes" : "business_days"; }

TimeFormat parse_format(const std::string& s) {
  if (s == "minutes") return TimeFormat::minutes;
  if (s == "business_days") return TimeFormat::business_days;
  throw Error(Errc::InvalidSpec, s, "time_format must be minutes or business_days");
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::Io, path.string());
  out << text;
}

}  // namespace

fs::path default_data_dir() {
  if (const char* env = std::getenv("GBPA_DATA_DIR"); env && *env) return env;
  return GBPA_DATA_DIR;
}

Scenario load_scenario(const fs::path& data_dir, const std::string& name) {
  Scenario s;
  s.name = name;
  s.data_dir = data_dir;
  s.config = read_json(data_dir / "scenarios" / name / "scenario.json", name);
  const Json& cfg = s.config;
  require_file(asset(s, cfg.at("template")), name);
  s.templates = TemplateLibrary::load(data_dir / "templates");
  s.mapping = FieldMapping::from_json(read_json(asset(s, cfg.at("mapping")), name));

  const fs::path log_path = require_file(asset(s, cfg.at("event_log")), name);
  s.rows = read_raw_records(log_path);
  s.log = load_event_log(log_path, s.mapping);
  if (cfg.contains("expected_records") && static_cast<int>(s.rows.size()) != cfg.at("expected_records").get<int>()) {
    throw Error(Errc::ScenarioAssetsMissing, name,
                log_path.string() + " has " + std::to_string(s.rows.size()) + " records, expected " +
                    std::to_string(cfg.at("expected_records").get<int>()));
  }

  auto res = std::make_shared<AgentResources>();
  const Json rdoc = cfg.value("resources", Json::object());
  const Json rule_sets = rdoc.value("rule_sets", Json::object());
  const Json lists = rdoc.value("lists", Json::object());
  for (const auto& [set_name, rel] : rule_sets.items()) {
    RuleSet rules = RuleSet::from_json(read_json(asset(s, rel), name));
    for (const auto& [list_name, list_rel] : lists.items()) {
      rules.load_list(list_name, require_file(asset(s, list_rel), name));
    }
    res->rule_sets.emplace(set_name, std::move(rules));
  }
  if (rdoc.contains("limits")) res->limits = LimitTable::from_json(read_json(asset(s, rdoc.at("limits")), name));
  res->log = std::make_shared<const EventLog>(s.log);
  s.resources = res;
  const Json accounts = rdoc.value("accounts", Json::object());
  for (const auto& [id, balance] : accounts.items()) {
    s.accounts.emplace(id, decimal_or_throw(balance, id));
  }
  if (rdoc.contains("account_balance")) s.default_balance = decimal_or_throw(rdoc.at("account_balance"), "balance");

  s.time_format = parse_format(cfg.value("time_format", std::string("minutes")));
  s.business_day_ms = cfg.value("business_day_ms", std::int64_t{0});
  if (s.time_format == TimeFormat::business_days && s.business_day_ms <= 0) {
    throw Error(Errc::InvalidSpec, name, "business_days needs business_day_ms");
  }
  s.sample_size = cfg.value("sample_size", 24);
  const Json approval_nodes = cfg.value("approval_nodes", Json::object());
  for (const auto& [variant, nodes] : approval_nodes.items()) {
    s.approval_nodes[variant] = nodes.get<std::vector<std::string>>();
  }

  const auto ref = cfg.value("reference_row", std::size_t{0});
  if (ref >= s.rows.size()) throw Error(Errc::ScenarioAssetsMissing, name, "reference row outside the log");
  s.baseline = instantiate_template(intent_for_row(s, s.rows[ref]), s.templates);
  s.optimize = OptimizeConfig::from_json(cfg);

  if (cfg.contains("defects")) {
    const Json& d = cfg.at("defects");
    DefectTaxonomy t;
    t.corpus = require_file(asset(s, d.at("corpus")), name);
    t.total = d.at("total").get<int>();
    t.defective = d.at("defective").get<int>();
    t.paid_field = d.at("paid_field").get<std::string>();
    int sum = 0;
    for (const auto& c : d.at("classes")) {
      DefectClass dc{c.at("name").get<std::string>(), c.at("count").get<int>(), std::nullopt};
      if (!c.at("caught_by").is_null()) dc.caught_by = c.at("caught_by").get<std::string>();
      sum += dc.count;
      t.classes.push_back(std::move(dc));
    }
    if (sum != t.defective) {
      throw Error(Errc::ScenarioAssetsMissing, name,
                  "defect classes sum to " + std::to_string(sum) + ", declared " + std::to_string(t.defective));
    }
    const auto corpus = read_raw_records(t.corpus);
    if (static_cast<int>(corpus.size()) != t.total) {
      throw Error(Errc::ScenarioAssetsMissing, name, "defect corpus has " + std::to_string(corpus.size()) + " rows");
    }
    std::map<std::string, int> seen;
    for (const auto& row : corpus) ++seen[row.at("defect")];
    for (const auto& c : t.classes) {
      if (seen[c.name] != c.count) {
        throw Error(Errc::ScenarioAssetsMissing, name,
                    "defect class " + c.name + " has " + std::to_string(seen[c.name]) + " rows");
      }
    }
    s.defects = std::move(t);
  }
  return s;
}

FieldMap inputs_for_row(const Scenario& scenario, const RawRecord& row) {
  return bound_inputs(instantiate_template(intent_for_row(scenario, row), scenario.templates));
}

std::int64_t trail_wait(const std::vector<AuditRecord>& trail, const ProcessSpec& spec) {
  std::int64_t run_start = trail.empty() ? 0 : trail.front().ts;
  std::map<std::string, std::int64_t> start;
  std::map<std::string, std::int64_t> finish;
  for (const auto& r : trail) {
    if (r.kind == "run_start") run_start = r.ts;
    if (r.kind == "status" && r.payload.value("status", "") == "running" && !start.contains(r.node)) {
      start[r.node] = r.ts;
    }
    if (r.kind == "agent_call") finish[r.node] = std::max(finish[r.node], r.ts);
  }
  std::map<std::string, std::int64_t> ready;
  for (const auto& [from, to] : infer_dependencies_serial(spec).data_edges()) {
    if (const auto it = finish.find(from); it != finish.end()) {
      ready[to] = std::max(ready.contains(to) ? ready[to] : run_start, it->second);
    }
  }
  std::int64_t wait = 0;
  for (const auto& [id, t] : start) wait += t - (ready.contains(id) ? ready[id] : run_start);
  return wait;
}

SimulationResult run_scenario(const Scenario& s, std::uint64_t seed) {
  SimulationResult r;
  r.scenario = s.name;
  r.seed = seed;
  r.time_format = s.time_format;
  r.business_day_ms = s.business_day_ms;
  const EventLog* log = s.optimize.correlation_keys.empty() ? nullptr : &s.log;
  r.optimization = optimize(s.baseline, log, s.optimize);

  // Partial Fisher-Yates on raw engine output, so the draw does not depend
  // on the standard library's distribution implementation.
  std::vector<std::size_t> order(s.rows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  const std::size_t k = std::min(order.size(), static_cast<std::size_t>(std::max(s.sample_size, 0)));
  for (std::size_t i = 0; i < k; ++i) std::swap(order[i], order[i + rng() % (order.size() - i)]);
  r.sample_rows.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
  std::sort(r.sample_rows.begin(), r.sample_rows.end());

  std::vector<FieldMap> inputs;
  for (const auto idx : r.sample_rows) inputs.push_back(inputs_for_row(s, s.rows[idx]));

  if (!s.log.events.empty()) {
    const Ratio total = data_analyst_compute({MetricKind::sum, "how_long"}, s.log);
    const auto n = static_cast<std::int64_t>(s.log.events.size());
    r.historical_mean_ms = (2 * (total.num / total.den) + n) / (2 * n);
  }

  r.baseline = run_variant(s, "baseline", r.optimization.baseline, r.sample_rows, inputs, seed);
  r.optimized = run_variant(s, "optimized", r.optimization.spec, r.sample_rows, inputs, seed);

  if (s.defects) {
    const auto corpus = read_raw_records(s.defects->corpus);
    std::vector<FieldMap> claims;
    claims.reserve(corpus.size());
    for (const auto& row : corpus) claims.push_back(inputs_for_row(s, row));
    const auto paid_before = screen(s, r.optimization.baseline, claims, seed);
    const auto paid_after = screen(s, r.optimization.spec, claims, seed);
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      const std::string defect = corpus[i].at("defect");
      const bool defective = defect != "none";
      if (defective) {
        if (paid_before[i]) ++r.baseline.defective_paid;
        if (paid_after[i]) ++r.optimized.defective_paid;
        if (paid_before[i]) ++r.baseline.paid_by_class[defect];
        if (paid_after[i]) ++r.optimized.paid_by_class[defect];
      } else {
        if (paid_before[i]) ++r.baseline.clean_paid;
        if (paid_after[i]) ++r.optimized.clean_paid;
      }
      r.screening.push_back({{"claim", corpus[i].at("claim_id")},
                             {"defect", defect},
                             {"baseline_paid", static_cast<bool>(paid_before[i])},
                             {"optimized_paid", static_cast<bool>(paid_after[i])}});
    }
    const auto total = static_cast<std::int64_t>(corpus.size());
    r.baseline.error_rate = Ratio::make(r.baseline.defective_paid, total);
    r.optimized.error_rate = Ratio::make(r.optimized.defective_paid, total);
  }

  OptimizationReport& rep = r.report;
  rep.end_to_end_before = mean_of(r.baseline.makespans);
  rep.end_to_end_after = mean_of(r.optimized.makespans);
  rep.node_count_before = static_cast<int>(r.baseline.spec.nodes.size());
  rep.node_count_after = static_cast<int>(r.optimized.spec.nodes.size());
  rep.risk_stage_count_before = risk_node_count(r.baseline.spec);
  rep.risk_stage_count_after = risk_node_count(r.optimized.spec);
  rep.parallel_cluster_before = parallel_cluster_count(build_execution_graph(r.baseline.spec));
  rep.parallel_cluster_after = parallel_cluster_count(build_execution_graph(r.optimized.spec));
  rep.inter_node_wait_before = mean_of(r.baseline.waits);
  rep.inter_node_wait_after = mean_of(r.optimized.waits);
  rep.error_rate_before = r.baseline.error_rate;
  rep.error_rate_after = r.optimized.error_rate;
  return r;
}

SimulationResult run_scenario(const std::string& name, std::uint64_t seed, const fs::path& data_dir) {
  return run_scenario(load_scenario(data_dir, name), seed);
}

Json slice_to_json(const SimulationResult& result, bool optimized) {
  const VariantResult& v = optimized ? result.optimized : result.baseline;
  const OptimizationReport& rep = result.report;
  std::int64_t total_time = 0;
  for (const auto m : v.makespans) total_time += m;
  Json utilization = Json::object();
  for (const auto& [node, busy] : v.busy_ms) {
    utilization[node] = {{"busy_ms", busy}, {"share_bp", total_time == 0 ? 0 : busy * 10000 / total_time}};
  }
  Json doc{{"scenario", result.scenario},
           {"variant", v.variant},
           {"seed", result.seed},
           {"runs", v.makespans.size()},
           {"time_format", format_name(result.time_format)},
           {"business_day_ms", result.business_day_ms},
           {"end_to_end_ms", optimized ? rep.end_to_end_after : rep.end_to_end_before},
           {"node_count", optimized ? rep.node_count_after : rep.node_count_before},
           {"parallel_clusters", optimized ? rep.parallel_cluster_after : rep.parallel_cluster_before},
           {"risk_stages", optimized ? rep.risk_stage_count_after : rep.risk_stage_count_before},
           {"inter_node_wait_ms", optimized ? rep.inter_node_wait_after : rep.inter_node_wait_before},
           {"error_rate", v.error_rate ? Json{{"num", v.error_rate->num}, {"den", v.error_rate->den}} : Json(nullptr)},
           {"approval_ms", v.approvals.empty() ? Json(nullptr) : Json(mean_of(v.approvals))},
           {"escalations", v.escalations},
           {"succeeded", v.succeeded},
           {"aborted", v.aborted},
           {"makespans_ms", v.makespans},
           {"utilization", utilization}};
  return doc;
}

ReportTable compare(const Json& before, const Json& after) {
  const auto scenario = before.at("scenario").get<std::string>();
  if (after.at("scenario").get<std::string>() != scenario) {
    throw Error(Errc::ScenarioMismatch, after.at("scenario").get<std::string>(), "compared against " + scenario);
  }
  const TimeFormat format = parse_format(before.at("time_format").get<std::string>());
  const auto day = before.at("business_day_ms").get<std::int64_t>();
  auto dur = [&](const Json& slice, const char* key) { return slice.at(key).get<std::int64_t>(); };
  auto count = [&](const Json& slice, const char* key) { return slice.at(key).get<int>(); };

  ReportTable t;
  t.scenario = scenario;
  const auto e2e_b = dur(before, "end_to_end_ms");
  const auto e2e_a = dur(after, "end_to_end_ms");
  t.rows.push_back({"End-to-End Time", format_duration(e2e_b, format, day), format_duration(e2e_a, format, day),
                    percent_change(e2e_b, e2e_a)});
  t.rows.push_back({"Process Nodes", nodes_cell(count(before, "node_count"), count(before, "parallel_clusters")),
                    nodes_cell(count(after, "node_count"), count(after, "parallel_clusters")),
                    percent_change(count(before, "node_count"), count(after, "node_count"))});
  t.rows.push_back({"Risk Control Stages", std::to_string(count(before, "risk_stages")),
                    std::to_string(count(after, "risk_stages")),
                    signed_delta(count(after, "risk_stages") - count(before, "risk_stages"))});
  t.rows.push_back({"Parallel Clusters", std::to_string(count(before, "parallel_clusters")),
                    std::to_string(count(after, "parallel_clusters")),
                    signed_delta(count(after, "parallel_clusters") - count(before, "parallel_clusters"))});
  const auto err_b = ratio_of(before.value("error_rate", Json()));
  const auto err_a = ratio_of(after.value("error_rate", Json()));
  if (err_b && err_a) {
    t.rows.push_back({"Error Rate", format_rate(*err_b), format_rate(*err_a), percent_change(*err_b, *err_a)});
  }

  const auto wait_b = dur(before, "inter_node_wait_ms");
  const auto wait_a = dur(after, "inter_node_wait_ms");
  t.supplementary.push_back({"Inter-Node Wait", format_duration(wait_b, format, day),
                             format_duration(wait_a, format, day), percent_change(wait_b, wait_a)});
  if (!before.value("approval_ms", Json()).is_null() && !after.value("approval_ms", Json()).is_null()) {
    const auto ap_b = dur(before, "approval_ms");
    const auto ap_a = dur(after, "approval_ms");
    const auto cal_b = day > 0 ? business_to_calendar_ms(ap_b, day) : ap_b;
    const auto cal_a = day > 0 ? business_to_calendar_ms(ap_a, day) : ap_a;
    t.supplementary.push_back({"Approval Time", trim_decimals(hundredths(cal_b, 3600000)) + " h",
                               trim_decimals(hundredths(cal_a, 3600000)) + " h", percent_change(cal_b, cal_a)});
  }
  t.footer =
      "Fixture data is synthetic: per-node durations, the defect classes and their counts are calibrated values, "
      "not observations.";
  if (format == TimeFormat::business_days) {
    t.footer += " Times are business time (" + trim_decimals(hundredths(day, 3600000)) +
                " h per day); approval time is elapsed calendar time.";
  }
  return t;
}

std::string render_table(const ReportTable& table) {
  std::vector<std::array<std::string, 4>> lines{{"Metric", "Before", "After", "Change"}};
  for (const auto& r : table.rows) lines.push_back({r.label, r.before, r.after, r.change});
  const std::size_t main_rows = lines.size();
  for (const auto& r : table.supplementary) lines.push_back({r.label, r.before, r.after, r.change});
  std::array<std::size_t, 4> width{};
  for (const auto& l : lines) {
    for (std::size_t c = 0; c < 4; ++c) width[c] = std::max(width[c], l[c].size());
  }
  auto render = [&](const std::array<std::string, 4>& l) {
    std::string s;
    for (std::size_t c = 0; c < 4; ++c) {
      s += l[c];
      if (c < 3) s += std::string(width[c] - l[c].size() + 3, ' ');
    }
    while (!s.empty() && s.back() == ' ') s.pop_back();
    return s + "\n";
  };
  std::string out = "Scenario: " + table.scenario + "\n\n";
  out += render(lines[0]);
  std::size_t rule = 0;
  for (const auto w : width) rule += w;
  out += std::string(rule + 9, '-') + "\n";
  for (std::size_t i = 1; i < main_rows; ++i) out += render(lines[i]);
  if (main_rows < lines.size()) {
    out += "\nSupplementary\n";
    for (std::size_t i = main_rows; i < lines.size(); ++i) out += render(lines[i]);
  }
  out += "\n" + table.footer + "\n";
  return out;
}

Json table_to_json(const ReportTable& table) {
  auto rows = [](const std::vector<ReportRow>& rs) {
    Json out = Json::array();
    for (const auto& r : rs) out.push_back({{"metric", r.label}, {"before", r.before}, {"after", r.after}, {"change", r.change}});
    return out;
  };
  return Json{{"scenario", table.scenario},
              {"rows", rows(table.rows)},
              {"supplementary", rows(table.supplementary)},
              {"footer", table.footer}};
}

Json result_to_json(const SimulationResult& result) {
  const Json before = slice_to_json(result, false);
  const Json after = slice_to_json(result, true);
  Json merges = Json::array();
  for (const auto& m : result.optimization.merges) {
    merges.push_back({{"survivor", m.survivor},
                      {"members", m.members},
                      {"reason", m.reason},
                      {"agent_kind", to_string(m.agent_kind)},
                      {"effectful", m.effectful},
                      {"risk_control", m.risk_control}});
  }
  Json skipped = Json::array();
  for (const auto& s : result.optimization.skipped) skipped.push_back({{"members", s.members}, {"reason", s.reason}});
  Json mined = Json::array();
  for (const auto& m : result.optimization.mined) mined.push_back({{"from", m.from}, {"to", m.to}, {"field", m.field}});

  const auto model_wait_before = inter_node_wait(result.baseline.spec);
  const auto model_wait_after = inter_node_wait(result.optimized.spec);
  Json doc{{"scenario", result.scenario},
           {"seed", result.seed},
           {"sample_rows", result.sample_rows},
           {"historical_mean_ms", result.historical_mean_ms},
           {"report", result.report.to_json()},
           {"estimate", result.optimization.report.to_json()},
           {"wait_model_ms", {{"before", model_wait_before}, {"after", model_wait_after}}},
           {"table", table_to_json(compare(before, after))},
           {"merges", merges},
           {"skipped_merges", skipped},
           {"mined_dependencies", mined}};
  if (!result.screening.empty()) {
    Json classes = Json::array();
    std::map<std::string, int> counts;
    for (const auto& row : result.screening) ++counts[row.at("defect").get<std::string>()];
    for (const auto& [name, n] : counts) {
      if (name == "none") continue;
      const auto b = result.baseline.paid_by_class.find(name);
      const auto a = result.optimized.paid_by_class.find(name);
      classes.push_back({{"class", name},
                         {"count", n},
                         {"paid_baseline", b == result.baseline.paid_by_class.end() ? 0 : b->second},
                         {"paid_optimized", a == result.optimized.paid_by_class.end() ? 0 : a->second}});
    }
    const int defective = static_cast<int>(result.screening.size()) - counts["none"];
    doc["defects"] = {{"total", result.screening.size()},
                      {"defective", defective},
                      {"caught", defective - result.optimized.defective_paid},
                      {"uncaught", result.optimized.defective_paid},
                      {"clean", counts["none"]},
                      {"clean_paid_baseline", result.baseline.clean_paid},
                      {"clean_paid_optimized", result.optimized.clean_paid},
                      {"classes", classes}};
  }
  return doc;
}

std::vector<fs::path> write_outputs(const SimulationResult& result, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  std::vector<fs::path> written;
  auto put = [&](const char* name, const std::string& text) {
    write_file(out_dir / name, text);
    written.push_back(out_dir / name);
  };
  const Json before = slice_to_json(result, false);
  const Json after = slice_to_json(result, true);
  put("report.json", result_to_json(result).dump(2) + "\n");
  put("report.txt", render_table(compare(before, after)));
  put("baseline.json", before.dump(2) + "\n");
  put("optimized.json", after.dump(2) + "\n");
  put("audit_baseline.jsonl", audit_to_jsonl(result.baseline.trail));
  put("audit_optimized.jsonl", audit_to_jsonl(result.optimized.trail));
  put("optimized_spec.json", spec_to_json(result.optimized.spec).dump(2) + "\n");
  if (!result.screening.empty()) {
    std::string lines;
    for (const auto& row : result.screening) lines += row.dump() + "\n";
    put("screening.jsonl", lines);
  }
  return written;
}

// ---------------------------------------------------------------- formatting

std::int64_t rounded_percent(std::int64_t num, std::int64_t den) {
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const std::int64_t mag = (200 * (num < 0 ? -num : num) + den) / (2 * den);
  return num < 0 ? -mag : mag;
}

std::string percent_change(std::int64_t before, std::int64_t after) {
  if (before == 0) return after == 0 ? "0%" : "n/a";
  const auto p = rounded_percent(after - before, before);
  return (p > 0 ? "+" : "") + std::to_string(p) + "%";
}

std::string percent_change(const Ratio& before, const Ratio& after) {
  if (before.num == 0) return after.num == 0 ? "0%" : "n/a";
  const auto p = rounded_percent(after.num * before.den - before.num * after.den, before.num * after.den);
  return (p > 0 ? "+" : "") + std::to_string(p) + "%";
}

std::string format_rate(const Ratio& rate) {
  // tenths of a percent
  const std::int64_t tenths = (2000 * rate.num + rate.den) / (2 * rate.den);
  return std::to_string(tenths / 10) + "." + std::to_string(tenths % 10) + "%";
}

std::string format_duration(std::int64_t ms, TimeFormat format, std::int64_t business_day_ms) {
  if (format == TimeFormat::minutes) return trim_decimals(hundredths(ms, 60000)) + " min";
  if (ms >= business_day_ms) {
    const auto v = hundredths(ms, business_day_ms);
    return trim_decimals(v) + (v == 100 ? " day" : " days");
  }
  const auto v = hundredths(ms, 3600000);
  return trim_decimals(v) + (v == 100 ? " hr" : " hrs");
}

std::int64_t business_to_calendar_ms(std::int64_t ms, std::int64_t business_day_ms) {
  return ms / business_day_ms * 86400000 + ms % business_day_ms;
}

}  // namespace gbpa
