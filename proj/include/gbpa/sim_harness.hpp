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
#include <optional>
#include <string>
#include <vector>

#include "gbpa/agents.hpp"
#include "gbpa/engine.hpp"
#include "gbpa/event_model.hpp"
#include "gbpa/optimizer.hpp"
#include "gbpa/planner.hpp"
#include "gbpa/process_spec.hpp"
#include "json.hpp"

namespace gbpa {

enum class TimeFormat { minutes, business_days };

struct DefectClass {
  std::string name;
  int count = 0;
  std::optional<std::string> caught_by;  // rule id; none for the residual class
};

struct DefectTaxonomy {
  std::filesystem::path corpus;
  int total = 0;
  int defective = 0;
  std::string paid_field;  // a run paid the claim iff this output is non-null
  std::vector<DefectClass> classes;
};

struct Scenario {
  std::string name;
  std::filesystem::path data_dir;
  Json config;
  TemplateLibrary templates;
  ProcessSpec baseline;  // template bound to the reference row
  OptimizeConfig optimize;
  FieldMapping mapping;
  std::vector<RawRecord> rows;  // historical log, file order
  EventLog log;
  /// Rule sets, limits and log; each simulated variant gets its own bank.
  std::shared_ptr<const AgentResources> resources;
  std::map<std::string, Decimal> accounts;
  std::optional<Decimal> default_balance;  // opened for every source account seen
  std::optional<DefectTaxonomy> defects;
  std::map<std::string, std::vector<std::string>> approval_nodes;  // variant -> node ids
  TimeFormat time_format = TimeFormat::minutes;
  std::int64_t business_day_ms = 0;
  int sample_size = 0;
};

/// $GBPA_DATA_DIR, else the source tree's data directory.
std::filesystem::path default_data_dir();

/// ScenarioAssetsMissing when a file is absent or a declared count disagrees.
Scenario load_scenario(const std::filesystem::path& data_dir, const std::string& name);

/// Builds the intent form for a row and binds it through the scenario template.
FieldMap inputs_for_row(const Scenario& scenario, const RawRecord& row);

/// Wait of one run recomputed from its trail: per node, first dispatch minus
/// the latest agent completion among its data-hazard predecessors.
std::int64_t trail_wait(const std::vector<AuditRecord>& trail, const ProcessSpec& spec);

struct VariantResult {
  std::string variant;  // "baseline" or "optimized"
  ProcessSpec spec;
  std::vector<std::int64_t> makespans;  // per sampled run
  std::vector<std::int64_t> waits;
  std::vector<std::int64_t> approvals;  // business ms spent in approval nodes
  std::map<std::string, std::int64_t> busy_ms;
  int escalations = 0;
  int succeeded = 0;
  int aborted = 0;
  std::vector<AuditRecord> trail;  // every sampled run, run order
  std::optional<Ratio> error_rate;
  int defective_paid = 0;
  int clean_paid = 0;
  std::map<std::string, int> paid_by_class;
};

struct SimulationResult {
  std::string scenario;
  std::uint64_t seed = 0;
  std::vector<std::size_t> sample_rows;
  OptimizeResult optimization;
  VariantResult baseline;
  VariantResult optimized;
  OptimizationReport report;  // measured over the runs
  std::int64_t historical_mean_ms = 0;
  Json screening = Json::array();  // one object per corpus claim
  TimeFormat time_format = TimeFormat::minutes;
  std::int64_t business_day_ms = 0;
};

SimulationResult run_scenario(const Scenario& scenario, std::uint64_t seed);
SimulationResult run_scenario(const std::string& name, std::uint64_t seed,
                              const std::filesystem::path& data_dir = default_data_dir());

/// One side of the comparison, as written to baseline.json / optimized.json.
Json slice_to_json(const SimulationResult& result, bool optimized);

struct ReportRow {
  std::string label;
  std::string before;
  std::string after;
  std::string change;
  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

struct ReportTable {
  std::string scenario;
  std::vector<ReportRow> rows;
  std::vector<ReportRow> supplementary;
  std::string footer;
};

/// ScenarioMismatch unless both slices come from the same scenario.
ReportTable compare(const Json& before, const Json& after);
std::string render_table(const ReportTable& table);
Json table_to_json(const ReportTable& table);

Json result_to_json(const SimulationResult& result);

/// report.json, report.txt, baseline.json, optimized.json, audit_baseline.jsonl,
/// audit_optimized.jsonl, optimized_spec.json and (with a corpus) screening.jsonl.
std::vector<std::filesystem::path> write_outputs(const SimulationResult& result, const std::filesystem::path& out_dir);

// ---------------------------------------------------------------- formatting

/// round-half-away-from-zero(100 * num / den); den must be non-zero.
std::int64_t rounded_percent(std::int64_t num, std::int64_t den);
/// "-40%", "+12%", "0%"; "n/a" when before is zero and after is not.
std::string percent_change(std::int64_t before, std::int64_t after);
std::string percent_change(const Ratio& before, const Ratio& after);
/// Rate with one decimal, e.g. "12.6%".
std::string format_rate(const Ratio& rate);
/// "15 min", "2.5 days", "4.25 hrs"; at most two decimals.
std::string format_duration(std::int64_t ms, TimeFormat format, std::int64_t business_day_ms);
/// Each whole business day becomes 24 calendar hours; the remainder is kept.
std::int64_t business_to_calendar_ms(std::int64_t ms, std::int64_t business_day_ms);

// ---------------------------------------------------------------- fixtures

/// Rewrites the scenario's generated fixture files; same seed, same bytes.
std::vector<std::filesystem::path> generate_fixtures(const std::string& name, std::uint64_t seed,
                                                     const std::filesystem::path& data_dir = default_data_dir());

}  // namespace gbpa
