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

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "gbpa/agents.hpp"
#include "gbpa/process_spec.hpp"
#include "json.hpp"

namespace gbpa {

enum class Goal { wire_transfer, reimbursement, transaction_query };

std::string_view to_string(Goal goal) noexcept;
std::optional<Goal> parse_goal(std::string_view text) noexcept;

struct Intent {
  Goal goal = Goal::wire_transfer;
  std::map<std::string, std::string> entities;
  std::vector<Json> constraints;
  std::string expected_outcome;

  Json to_json() const;
  static Intent from_json(const Json& doc);
  friend bool operator==(const Intent&, const Intent&) = default;
};

/// One grammar rule per goal; `sample` is the documented example it must accept.
struct GrammarRule {
  Goal goal;
  std::string trigger;  // case-insensitive
  std::vector<std::string> required;
  std::string sample;
};

const std::vector<GrammarRule>& intent_grammar();

/// Free text. UnrecognizedIntent when no trigger matches, MissingEntity(name)
/// for the first absent required entity.
Intent extract_intent(std::string_view text);
/// Form record ({"employee":..., "amount":"42.50 USD", ...}); goal taken from
/// "goal" or inferred from the keys present.
Intent extract_intent(const Json& form);

struct TemplateLibrary {
  std::map<Goal, Json> templates;
  /// Reads <goal>.json files from a directory.
  static TemplateLibrary load(const std::filesystem::path& dir);
};

/// Binds "{{name}}" in every string of the template. NoTemplate, UnboundPlaceholder.
ProcessSpec instantiate_template(const Intent& intent, const TemplateLibrary& library);

/// Run inputs carried by a planned spec (metadata.bindings).
FieldMap bound_inputs(const ProcessSpec& spec);

class PlannerProvider {
 public:
  virtual ~PlannerProvider() = default;
  virtual std::set<Goal> capabilities() const = 0;
  /// Returns a spec document; any exception counts as provider failure.
  virtual Json plan(const Intent& intent, const std::vector<std::string>& context_narratives, std::uint64_t seed) = 0;
};

/// POST {base_url}/plan with {"intent", "context_narratives", "seed"}.
class HttpPlannerProvider final : public PlannerProvider {
 public:
  explicit HttpPlannerProvider(std::string base_url,
                               std::chrono::milliseconds deadline = std::chrono::seconds(10),
                               std::set<Goal> goals = {Goal::wire_transfer, Goal::reimbursement,
                                                       Goal::transaction_query});
  std::set<Goal> capabilities() const override { return goals_; }
  Json plan(const Intent& intent, const std::vector<std::string>& context_narratives, std::uint64_t seed) override;

 private:
  std::string base_url_;
  std::chrono::milliseconds deadline_;
  std::set<Goal> goals_;
};

/// provider -> template -> PlanningFailed. A null provider goes straight to templates.
ProcessSpec plan_with_provider(const Intent& intent, const std::vector<std::string>& context_narratives,
                               PlannerProvider* provider, const TemplateLibrary& library, std::uint64_t seed = 0);

}  // namespace gbpa
