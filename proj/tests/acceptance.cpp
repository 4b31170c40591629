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

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "gbpa/engine.hpp"
#include "gbpa/error.hpp"
#include "gbpa/graph.hpp"
#include "gbpa/optimizer.hpp"
#include "gbpa/sim_harness.hpp"
#include "support/support.hpp"

using namespace gbpa;
using gbpa::testing::Gen;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Collects broken expectations for one criterion.
struct Check {
  std::vector<std::string> failures;
  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
};

const ReportRow* find_row(const std::vector<ReportRow>& rows, const std::string& label) {
  for (const auto& r : rows) {
    if (r.label == label) return &r;
  }
  return nullptr;
}

void expect_row(Check& c, const std::vector<ReportRow>& rows, const ReportRow& want) {
  const auto* got = find_row(rows, want.label);
  if (!got) {
    c.failures.push_back("missing row " + want.label);
    return;
  }
  c.expect(*got == want, want.label + ": got " + got->before + " -> " + got->after + " (" + got->change + ")");
}

int parse_percent(const std::string& s) { return std::stoi(s.substr(0, s.size() - 1)); }

Check wire_scenario() {
  Check c;
  const auto t0 = Clock::now();
  const auto r = run_scenario("wire_transfer", 42);
  const double secs = seconds_since(t0);
  const auto table = compare(slice_to_json(r, false), slice_to_json(r, true));
  expect_row(c, table.rows, {"End-to-End Time", "15 min", "9 min", "-40%"});
  expect_row(c, table.rows, {"Process Nodes", "13", "9 (2 groups in parallel)", "-31%"});
  expect_row(c, table.rows, {"Risk Control Stages", "0", "2", "+2"});
  expect_row(c, table.rows, {"Parallel Clusters", "0", "2", "+2"});
  if (const auto* wait = find_row(table.supplementary, "Inter-Node Wait")) {
    const int pct = parse_percent(wait->change);
    c.expect(pct >= -59 && pct <= -55, "wait change " + wait->change);
  } else {
    c.failures.push_back("missing row Inter-Node Wait");
  }
  c.expect(secs < 5.0, "runtime " + std::to_string(secs) + " s");
  return c;
}

Check reimbursement_scenario() {
  Check c;
  const auto t0 = Clock::now();
  const auto r = run_scenario("reimbursement", 42);
  const double secs = seconds_since(t0);
  const auto table = compare(slice_to_json(r, false), slice_to_json(r, true));
  expect_row(c, table.rows, {"End-to-End Time", "2.5 days", "4.25 hrs", "-82%"});
  expect_row(c, table.rows, {"Process Nodes", "5", "3 (1 group in parallel)", "-40%"});
  expect_row(c, table.rows, {"Risk Control Stages", "1", "3", "+2"});
  expect_row(c, table.rows, {"Error Rate", "12.6%", "0.8%", "-94%"});
  if (const auto* approval = find_row(table.supplementary, "Approval Time")) {
    c.expect(approval->before == "24 h" && approval->after == "4 h",
             "approval " + approval->before + " -> " + approval->after);
  } else {
    c.failures.push_back("missing row Approval Time");
  }
  c.expect(r.baseline.error_rate && *r.baseline.error_rate == Ratio::make(126, 1000), "baseline error count");
  c.expect(r.optimized.error_rate && *r.optimized.error_rate == Ratio::make(8, 1000), "optimized error count");
  c.expect(secs < 5.0, "runtime " + std::to_string(secs) + " s");
  return c;
}

Check scheduler_safety() {
  Check c;
  const auto t0 = Clock::now();
  Gen g(20260);
  auto agent = std::make_shared<testing::ScriptedAgent>(15, 8);
  int executed = 0;
  int rejected = 0;
  while (executed < 1000) {
    const auto spec = testing::random_dag_spec(g, {1, 50, g.between(5, 40), 12, true});
    agent->clear();
    Engine engine(testing::scripted_registry(agent));
    RunResult result;
    try {
      result = engine.execute(build_execution_graph(spec), {}, std::make_shared<SimulatedClock>(), g.next());
    } catch (const Error& e) {
      c.expect(e.code() == Errc::WriteConflict, std::string("unexpected error ") + e.what());
      c.expect(testing::same_stage_write_overlap(spec), "rejected spec " + spec.id + " has no overlap");
      ++rejected;
      continue;
    }
    c.expect(!testing::same_stage_write_overlap(spec), "accepted spec " + spec.id + " has an overlap");
    result = testing::settle_randomly(engine, result, spec, g);
    c.expect(testing::dependency_violations(result.trail, spec).empty(), "dependency violation in " + spec.id);
    c.expect(testing::order_violations(agent->log(), spec).empty(), "order violation in " + spec.id);
    c.expect(testing::write_races(agent->log()).empty(), "write race in " + spec.id);
    ++executed;
  }
  const double secs = seconds_since(t0);
  c.expect(secs < 60.0, "runtime " + std::to_string(secs) + " s");
  std::cout << "  executed " << executed << " DAGs, " << rejected << " rejected with WriteConflict, "
            << secs << " s\n";
  return c;
}

Check optimizer_preservation() {
  Check c;
  Gen g(31337);
  for (int i = 0; i < 1000; ++i) {
    const auto spec = testing::random_chain_spec(g, 16);
    const auto config = testing::random_optimize_config(g, spec);
    const auto result = optimize(spec, nullptr, config);
    const auto tag = "spec " + std::to_string(i);
    const auto mismatch = testing::effectful_mismatch(spec, result.spec, result.merges);
    c.expect(mismatch.empty(), tag + ": " + mismatch);
    c.expect(estimate_makespan(result.spec) <= estimate_makespan(result.baseline), tag + ": makespan grew");
    c.expect(testing::broken_dependency_paths(result.deps, result.spec, result.merges).empty(),
             tag + ": dependency path lost");
  }
  return c;
}

Check escalation_conformance() {
  Check c;
  c.failures = testing::check_escalation_conformance();
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Check determinism() {
  Check c;
  const auto root = fs::temp_directory_path() / "gbpa-acceptance";
  fs::remove_all(root);
  for (const char* name : {"wire_transfer", "reimbursement"}) {
    const auto a = write_outputs(run_scenario(name, 42), root / name / "a");
    const auto b = write_outputs(run_scenario(name, 42), root / name / "b");
    c.expect(a.size() == b.size() && !a.empty(), std::string(name) + ": file lists differ");
    for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
      c.expect(a[i].filename() == b[i].filename() && slurp(a[i]) == slurp(b[i]),
               std::string(name) + ": " + a[i].filename().string() + " differs");
    }
  }
  fs::remove_all(root);
  return c;
}

Check audit_replay() {
  Check c;
  Gen g(4242);
  auto agent = std::make_shared<testing::ScriptedAgent>(20);
  for (int i = 0; i < 1000; ++i) {
    const auto spec = testing::random_dag_spec(g, {1, 20, 30, 8, false});
    Engine engine(testing::scripted_registry(agent));
    auto result = engine.execute(build_execution_graph(spec), {}, std::make_shared<SimulatedClock>(), g.next());
    result = testing::settle_randomly(engine, result, spec, g);
    c.expect(testing::interpret_trail(result.trail) == engine.snapshot(result.state.run_id).state,
             "run " + std::to_string(i) + " replays to a different state");
  }
  return c;
}

Check oracle_equivalence() {
  Check c;
  Gen g(88);
  for (int i = 0; i < 10000; ++i) {
    const int n = g.between(1, 8);
    const auto ids = testing::random_ids(g, n);
    const auto edges = testing::random_edges(g, ids, g.between(0, 100));
    ProcessSpec spec;
    spec.id = "g" + std::to_string(i);
    for (const auto& id : ids) {
      NodeSpec node;
      node.id = id;
      node.writes = {id + ".out"};
      spec.nodes.push_back(node);
    }
    spec.edges = edges;
    const auto graph = build_execution_graph(spec);
    const auto depths = testing::brute_force_depths(ids, edges);
    for (const auto& id : ids) {
      c.expect(graph.stage_of.at(id) == depths.at(id), spec.id + ": stage of " + id);
    }
  }
  return c;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, Check (*)()>> criteria = {
      {"wire transfer scenario", wire_scenario},
      {"reimbursement scenario", reimbursement_scenario},
      {"scheduler safety", scheduler_safety},
      {"optimizer preservation", optimizer_preservation},
      {"escalation conformance", escalation_conformance},
      {"determinism", determinism},
      {"audit replay", audit_replay},
      {"oracle equivalence", oracle_equivalence},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Check c;
    try {
      c = run();
    } catch (const std::exception& e) {
      c.failures.push_back(std::string("threw: ") + e.what());
    }
    std::cout << (c.failures.empty() ? "PASS " : "FAIL ") << name << '\n';
    for (std::size_t i = 0; i < std::min<std::size_t>(c.failures.size(), 5); ++i) {
      std::cout << "  " << c.failures[i] << '\n';
    }
    if (c.failures.size() > 5) std::cout << "  ... " << c.failures.size() - 5 << " more\n";
    if (!c.failures.empty()) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
