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

#include "gbpa/planner.hpp"

#include <fstream>
#include <regex>
#include <sstream>

#include "gbpa/error.hpp"

namespace gbpa {

namespace {

constexpr std::pair<Goal, std::string_view> kGoals[] = {
    {Goal::wire_transfer, "wire_transfer"},
    {Goal::reimbursement, "reimbursement"},
    {Goal::transaction_query, "transaction_query"},
};

struct Extractor {
  std::string name;
  std::regex pattern;
  int group = 1;
};

const std::vector<Extractor>& extractors() {
  static const std::vector<Extractor> list = [] {
    const auto icase = std::regex::ECMAScript | std::regex::icase;
    return std::vector<Extractor>{
        {"amount", std::regex(R"((\d+(?:\.\d+)?)\s*([A-Z]{3})\b)"), 1},
        {"currency", std::regex(R"((\d+(?:\.\d+)?)\s*([A-Z]{3})\b)"), 2},
        {"src", std::regex(R"(\bfrom\s+([A-Za-z0-9][A-Za-z0-9_-]*))", icase), 1},
        {"dst", std::regex(R"(\bto\s+([A-Za-z0-9][A-Za-z0-9_-]*))", icase), 1},
        {"purpose", std::regex(R"(\bfor\s+([a-z][a-z_]*)\b)", icase), 1},
        {"requester", std::regex(R"(\bby\s+([A-Za-z0-9][A-Za-z0-9_-]*))", icase), 1},
        {"role", std::regex(R"(\bas\s+([a-z_]+)\b)", icase), 1},
        {"employee", std::regex(R"(\bemployee\s+([A-Za-z0-9][A-Za-z0-9_-]*))", icase), 1},
        {"receipt", std::regex(R"(\breceipt\s+([A-Za-z0-9][A-Za-z0-9_-]*))", icase), 1},
        {"account", std::regex(R"(\b(?:for|of|on)\s+(ACC-[A-Za-z0-9_-]+))", icase), 1},
    };
  }();
  return list;
}

const std::map<Goal, std::map<std::string, std::string>>& defaults() {
  static const std::map<Goal, std::map<std::string, std::string>> d{
      {Goal::wire_transfer, {{"purpose", "payment"}, {"requester", "self"}, {"role", "customer"}}},
      {Goal::reimbursement, {{"category", "travel"}, {"tax_id", ""}, {"vendor", ""}}},
      {Goal::transaction_query, {{"limit", "10"}}},
  };
  return d;
}

const std::map<Goal, std::string>& outcomes() {
  static const std::map<Goal, std::string> o{
      {Goal::wire_transfer, "funds transferred and customer notified"},
      {Goal::reimbursement, "claim paid and archived"},
      {Goal::transaction_query, "matching transactions listed"},
  };
  return o;
}

std::vector<Json> constraints_in(std::string_view text) {
  static const std::regex regimes(R"(\b(AML|KYC|SOX|GDPR|PSD2)\b)", std::regex::icase);
  std::vector<Json> out;
  std::set<std::string> seen;
  const std::string s(text);
  for (auto it = std::sregex_iterator(s.begin(), s.end(), regimes); it != std::sregex_iterator(); ++it) {
    std::string tag = (*it)[1];
    for (auto& c : tag) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (seen.insert(tag).second) out.push_back(Json{{"regime", tag}});
  }
  return out;
}

Intent finish_intent(Goal goal, std::map<std::string, std::string> entities, std::vector<Json> constraints) {
  const auto& rule = *std::find_if(intent_grammar().begin(), intent_grammar().end(),
                                   [&](const GrammarRule& r) { return r.goal == goal; });
  for (const auto& name : rule.required) {
    const auto it = entities.find(name);
    if (it == entities.end() || it->second.empty()) throw Error(Errc::MissingEntity, name);
  }
  for (const auto& [k, v] : defaults().at(goal)) entities.emplace(k, v);
  if (goal == Goal::wire_transfer) entities.emplace("counterparty", entities.at("dst"));
  if (goal == Goal::reimbursement) {
    // a claim with no separate invoice or budget is checked against itself
    entities.emplace("invoice_amount", entities.at("amount"));
    entities.emplace("budget", entities.at("amount"));
  }
  return Intent{goal, std::move(entities), std::move(constraints), outcomes().at(goal)};
}

void bind_strings(Json& node, const std::map<std::string, std::string>& entities) {
  if (node.is_string()) {
    static const std::regex placeholder(R"(\{\{([A-Za-z0-9_]+)\}\})");
    const std::string s = node.get<std::string>();
    std::string out;
    auto last = s.cbegin();
    for (auto it = std::sregex_iterator(s.begin(), s.end(), placeholder); it != std::sregex_iterator(); ++it) {
      const std::string name = (*it)[1];
      const auto value = entities.find(name);
      if (value == entities.end()) throw Error(Errc::UnboundPlaceholder, name);
      out.append(last, s.cbegin() + it->position());
      out += value->second;
      last = s.cbegin() + it->position() + it->length();
    }
    out.append(last, s.cend());
    node = out;
  } else if (node.is_structured()) {
    for (auto& child : node) bind_strings(child, entities);
  }
}

}  // namespace

std::string_view to_string(Goal goal) noexcept {
  for (const auto& [g, name] : kGoals) {
    if (g == goal) return name;
  }
  return "wire_transfer";
}

std::optional<Goal> parse_goal(std::string_view text) noexcept {
  for (const auto& [g, name] : kGoals) {
    if (name == text) return g;
  }
  return std::nullopt;
}

Json Intent::to_json() const {
  return Json{{"goal", to_string(goal)},
              {"entities", entities},
              {"constraints", constraints},
              {"expected_outcome", expected_outcome}};
}

Intent Intent::from_json(const Json& doc) {
  Intent i;
  const auto goal = parse_goal(doc.at("goal").get<std::string>());
  if (!goal) throw Error(Errc::UnrecognizedIntent, doc.at("goal").get<std::string>());
  i.goal = *goal;
  i.entities = doc.value("entities", Json::object()).get<std::map<std::string, std::string>>();
  i.constraints = doc.value("constraints", Json::array()).get<std::vector<Json>>();
  i.expected_outcome = doc.value("expected_outcome", std::string());
  return i;
}

const std::vector<GrammarRule>& intent_grammar() {
  static const std::vector<GrammarRule> rules{
      {Goal::transaction_query, R"(\b(show|list|query|find)\b.*\b(transactions?|payments?|transfers?)\b)",
       {"account"}, "show transactions for ACC-1"},
      {Goal::reimbursement, R"(\b(reimburse|reimbursement|expense\s+claim)\b)",
       {"employee", "amount", "currency", "receipt"}, "reimburse employee E-9 42.50 USD receipt R-1"},
      {Goal::wire_transfer, R"(\b(transfer|wire|send)\b)", {"amount", "currency", "src", "dst"},
       "transfer 100 USD from ACC-1 to ACC-2"},
  };
  return rules;
}

Intent extract_intent(std::string_view text) {
  const std::string s(text);
  if (s.find_first_not_of(" \t\r\n") == std::string::npos) throw Error(Errc::UnrecognizedIntent, "", "empty input");
  for (const auto& rule : intent_grammar()) {
    if (!std::regex_search(s, std::regex(rule.trigger, std::regex::ECMAScript | std::regex::icase))) continue;
    std::map<std::string, std::string> entities;
    for (const auto& ex : extractors()) {
      std::smatch m;
      if (std::regex_search(s, m, ex.pattern)) entities.emplace(ex.name, m[static_cast<std::size_t>(ex.group)]);
    }
    // "for <purpose>" and "for ACC-.." share a keyword; keep each where it belongs
    if (rule.goal == Goal::transaction_query) entities.erase("purpose");
    if (rule.goal != Goal::transaction_query) entities.erase("account");
    if (rule.goal != Goal::wire_transfer) {
      for (const char* k : {"src", "dst", "purpose", "requester", "role"}) entities.erase(k);
    }
    if (rule.goal != Goal::reimbursement) {
      entities.erase("employee");
      entities.erase("receipt");
    }
    return finish_intent(rule.goal, std::move(entities), constraints_in(s));
  }
  throw Error(Errc::UnrecognizedIntent, s);
}

Intent extract_intent(const Json& form) {
  if (!form.is_object() || form.empty()) throw Error(Errc::UnrecognizedIntent, "", "empty form");
  std::optional<Goal> goal;
  if (form.contains("goal")) {
    goal = parse_goal(form.at("goal").get<std::string>());
    if (!goal) throw Error(Errc::UnrecognizedIntent, form.at("goal").get<std::string>());
  } else if (form.contains("employee") || form.contains("receipt")) {
    goal = Goal::reimbursement;
  } else if (form.contains("src") || form.contains("dst")) {
    goal = Goal::wire_transfer;
  } else if (form.contains("account")) {
    goal = Goal::transaction_query;
  } else {
    throw Error(Errc::UnrecognizedIntent, form.dump());
  }
  std::map<std::string, std::string> entities;
  for (const auto& [k, v] : form.items()) {
    if (k == "goal" || k == "constraints") continue;
    entities[k] = v.is_string() ? v.get<std::string>() : v.dump();
  }
  if (const auto it = entities.find("amount"); it != entities.end()) {
    static const std::regex money(R"(^\s*(\d+(?:\.\d+)?)\s*([A-Z]{3})\s*$)");
    std::smatch m;
    if (std::regex_match(it->second, m, money)) {
      entities["currency"] = m[2];
      it->second = m[1];
    }
  }
  std::vector<Json> constraints;
  if (form.contains("constraints")) constraints = form.at("constraints").get<std::vector<Json>>();
  return finish_intent(*goal, std::move(entities), std::move(constraints));
}

TemplateLibrary TemplateLibrary::load(const std::filesystem::path& dir) {
  TemplateLibrary lib;
  for (const auto& [goal, name] : kGoals) {
    const auto path = dir / (std::string(name) + ".json");
    if (!std::filesystem::exists(path)) continue;
    std::ifstream in(path);
    if (!in) throw Error(Errc::Io, path.string());
    try {
      lib.templates[goal] = Json::parse(in);
    } catch (const Json::parse_error& e) {
      throw Error(Errc::InvalidSpec, path.string(), e.what());
    }
  }
  return lib;
}

ProcessSpec instantiate_template(const Intent& intent, const TemplateLibrary& library) {
  const auto it = library.templates.find(intent.goal);
  if (it == library.templates.end()) throw Error(Errc::NoTemplate, std::string(to_string(intent.goal)));
  Json doc = it->second;
  bind_strings(doc, intent.entities);
  if (doc.dump().find("{{") != std::string::npos) throw Error(Errc::UnboundPlaceholder, "{{", "malformed placeholder");
  return parse_spec(doc);
}

FieldMap bound_inputs(const ProcessSpec& spec) {
  FieldMap out;
  if (spec.metadata.contains("bindings")) {
    for (const auto& [k, v] : spec.metadata.at("bindings").items()) out[k] = v;
  }
  return out;
}

ProcessSpec plan_with_provider(const Intent& intent, const std::vector<std::string>& context_narratives,
                               PlannerProvider* provider, const TemplateLibrary& library, std::uint64_t seed) {
  std::string provider_error = "no provider";
  if (provider) {
    if (!provider->capabilities().contains(intent.goal)) {
      provider_error = "provider does not support " + std::string(to_string(intent.goal));
    } else {
      try {
        return parse_spec(provider->plan(intent, context_narratives, seed));
      } catch (const std::exception& e) {
        provider_error = e.what();
      }
    }
  }
  try {
    return instantiate_template(intent, library);
  } catch (const Error& e) {
    throw Error(Errc::PlanningFailed, std::string(to_string(intent.goal)),
                "provider: " + provider_error + "; template: " + e.what());
  }
}

}  // namespace gbpa
