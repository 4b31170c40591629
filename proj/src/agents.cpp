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

#include "gbpa/agents.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <regex>
#include <sstream>

#include "gbpa/error.hpp"

namespace gbpa {

std::uint64_t stable_hash(std::string_view text) noexcept {
  std::uint64_t h = 1469598103934665603ULL;
  for (const unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

namespace {

std::string hex8(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%08llx", static_cast<unsigned long long>(v & 0xffffffffULL));
  return buf;
}

std::string text_of(const Json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_null()) return {};
  return v.dump();
}

std::optional<Decimal> decimal_of(const Json& v) {
  if (v.is_number_integer()) return Decimal::from_int(v.get<std::int64_t>());
  if (v.is_number() || v.is_string()) return Decimal::parse(text_of(v));
  return std::nullopt;
}

bool truthy(const Json& v) {
  if (v.is_null()) return false;
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    return !s.empty() && s != "rejected" && s != "false";
  }
  return true;
}

std::string last_segment(const std::string& path) {
  const auto dot = path.rfind('.');
  return dot == std::string::npos ? path : path.substr(dot + 1);
}

const Json& empty_object() {
  static const Json obj = Json::object();
  return obj;
}

const Json& params_of(const AgentTask& task) { return task.params ? *task.params : empty_object(); }

// params "args": {name: "input.path" | {"const": v}}
Json resolve_args(const Json& spec, const FieldMap& inputs) {
  Json args = Json::object();
  for (const auto& [name, source] : spec.items()) {
    if (source.is_object() && source.contains("const")) {
      args[name] = source.at("const");
    } else {
      const auto it = inputs.find(source.get<std::string>());
      args[name] = it == inputs.end() ? Json(nullptr) : it->second;
    }
  }
  return args;
}

// Maps an endpoint result onto the node's declared writes: explicit "out"
// mapping first, then the write path's last segment, then a lone result key.
FieldMap fill_writes(const NodeSpec& node, const Json& result, const Json& params) {
  FieldMap out;
  const Json& mapping = params.value("out", empty_object());
  for (const auto& path : node.writes) {
    if (mapping.contains(path)) {
      out[path] = result.value(mapping.at(path).get<std::string>(), Json(nullptr));
    } else if (result.contains(last_segment(path))) {
      out[path] = result.at(last_segment(path));
    } else if (result.size() == 1) {
      out[path] = result.begin().value();
    } else {
      out[path] = nullptr;
    }
  }
  return out;
}

bool compare(const std::string& op, const Json& lhs, const Json& rhs) {
  const auto a = decimal_of(lhs);
  const auto b = decimal_of(rhs);
  if (a && b) {
    if (op == "<=") return *a <= *b;
    if (op == "<") return *a < *b;
    if (op == ">=") return *a >= *b;
    if (op == ">") return *a > *b;
    if (op == "==") return *a == *b;
    if (op == "!=") return *a != *b;
    return false;
  }
  if (lhs.is_null() || rhs.is_null()) return false;
  if (op == "==") return text_of(lhs) == text_of(rhs);
  if (op == "!=") return text_of(lhs) != text_of(rhs);
  return false;
}

bool predicate_holds(const Rule& rule, const FieldMap& fields, const RuleSet& set) {
  const auto it = fields.find(rule.field);
  const Json value = it == fields.end() ? Json(nullptr) : it->second;
  const auto op = rule.predicate.at("op").get<std::string>();
  if (op == "present") return !value.is_null() && text_of(value) != "";
  if (value.is_null()) return false;
  if (op == "in" || op == "not_in") {
    bool member = false;
    if (rule.predicate.contains("values")) {
      for (const auto& v : rule.predicate.at("values")) member = member || text_of(v) == text_of(value);
    } else {
      const auto list = set.lists.find(rule.predicate.at("list").get<std::string>());
      member = list != set.lists.end() && list->second.contains(text_of(value));
    }
    return op == "in" ? member : !member;
  }
  if (op == "matches") {
    const std::regex re(rule.predicate.at("pattern").get<std::string>());
    return std::regex_match(text_of(value), re);
  }
  if (op == "truthy") return truthy(value);
  if (rule.predicate.contains("field")) {
    const auto other = fields.find(rule.predicate.at("field").get<std::string>());
    if (other == fields.end()) return false;
    return compare(op, value, other->second);
  }
  return compare(op, value, rule.predicate.at("value"));
}

}  // namespace

// ---------------------------------------------------------------- registry

void AgentRegistry::bind(AgentKind kind, std::shared_ptr<Agent> agent, bool exclusive,
                         std::set<std::string> output_schema) {
  if (bindings_.contains(kind)) throw Error(Errc::InvalidSpec, std::string(to_string(kind)), "kind already bound");
  bindings_.emplace(kind, Binding{std::move(agent), exclusive, std::move(output_schema)});
}

const AgentRegistry::Binding* AgentRegistry::find(AgentKind kind) const {
  const auto it = bindings_.find(kind);
  return it == bindings_.end() ? nullptr : &it->second;
}

void AgentRegistry::check(const ProcessSpec& spec) const {
  for (const auto& node : spec.nodes) {
    const Binding* b = find(node.agent_kind);
    if (!b) throw Error(Errc::UnboundAgent, std::string(to_string(node.agent_kind)), "node " + node.id);
    if (!b->output_schema.empty()) {
      for (const auto& w : node.writes) {
        if (!b->output_schema.contains(w)) {
          throw Error(Errc::InvalidSpec, node.id, "write " + w + " outside the agent's output schema");
        }
      }
    }
    const auto policy = spec.policy_for(node.id);
    if (policy.fallback_kind && !find(*policy.fallback_kind)) {
      throw Error(Errc::UnboundAgent, std::string(to_string(*policy.fallback_kind)), "fallback of " + node.id);
    }
  }
}

// ---------------------------------------------------------------- rules

RuleSet RuleSet::from_json(const Json& doc) {
  RuleSet set;
  std::set<std::string> ids;
  for (const auto& r : doc.value("rules", Json::array())) {
    Rule rule;
    rule.id = r.at("id").get<std::string>();
    if (!ids.insert(rule.id).second) throw Error(Errc::InvalidRule, rule.id, "duplicate rule id");
    rule.field = r.at("field").get<std::string>();
    rule.predicate = r.at("predicate");
    static const std::set<std::string> ops{"<=", "<", ">=", ">", "==", "!=", "in", "not_in", "matches",
                                           "present", "truthy"};
    if (!rule.predicate.contains("op") || !ops.contains(rule.predicate.at("op").get<std::string>())) {
      throw Error(Errc::InvalidRule, rule.id, "unknown predicate operator");
    }
    if (rule.predicate.at("op") == "matches") {
      try {
        std::regex probe(rule.predicate.at("pattern").get<std::string>());
      } catch (const std::regex_error&) {
        throw Error(Errc::InvalidRule, rule.id, "bad pattern");
      }
    }
    const auto severity = r.value("severity", std::string("block"));
    rule.severity = severity == "warn" ? Severity::warn : Severity::block;
    rule.code = r.value("code", rule.id);
    set.rules.push_back(std::move(rule));
  }
  const Json lists = doc.value("lists", Json::object());
  for (const auto& [name, values] : lists.items()) {
    for (const auto& v : values) set.lists[name].insert(text_of(v));
  }
  return set;
}

void RuleSet::load_list(const std::string& name, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, path.string(), "cannot open list");
  auto& list = lists[name];
  std::string line;
  while (std::getline(in, line)) {
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') continue;
    const auto e = line.find_last_not_of(" \t\r");
    list.insert(line.substr(b, e - b + 1));
  }
}

CheckReport validation_check(const FieldMap& fields, const RuleSet& rules) {
  CheckReport report;
  for (const auto& rule : rules.rules) {
    if (predicate_holds(rule, fields, rules)) continue;
    report.violations.push_back({rule.id, rule.code, rule.field, rule.severity});
    if (rule.severity == Severity::block) report.passed = false;
  }
  return report;
}

// ---------------------------------------------------------------- document

FieldMap document_extract(std::string_view doc, const std::vector<std::string>& schema) {
  std::map<std::string, std::string> found;
  std::istringstream in{std::string(doc)};
  std::string line;
  while (std::getline(in, line)) {
    const auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string();
      return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
    };
    const auto key = trim(line.substr(0, colon));
    const auto value = trim(line.substr(colon + 1));
    if (!key.empty() && !value.empty()) found.emplace(key, value);
  }
  FieldMap out;
  std::string missing;
  for (const auto& key : schema) {
    const auto it = found.find(key);
    if (it == found.end()) {
      missing += (missing.empty() ? "" : ",") + key;
    } else {
      out[key] = it->second;
    }
  }
  if (!missing.empty()) throw Error(Errc::ExtractionFailed, missing);
  return out;
}

// ---------------------------------------------------------------- authorization

LimitTable LimitTable::from_json(const Json& doc) {
  LimitTable t;
  for (const auto& [role, limit] : doc.items()) {
    const auto d = decimal_of(limit);
    if (!d) throw Error(Errc::BadQuantity, role, "limit must be a decimal");
    t.role_limits.emplace(role, *d);
  }
  return t;
}

Decision authorize(const Decimal& amount, const std::string& role, const LimitTable& limits) {
  const auto it = limits.role_limits.find(role);
  if (it == limits.role_limits.end()) throw Error(Errc::UnknownRole, role);
  return amount <= it->second ? Decision::approve : Decision::require_escalation;
}

// ---------------------------------------------------------------- retrieval / analysis

std::vector<Event5W3H1R> retrieval_lookup(std::string_view query, const EventLog& log, std::size_t k) {
  auto lower = [](std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
  };
  std::vector<std::string> terms;
  std::istringstream in{lower(std::string(query))};
  for (std::string t; in >> t;) terms.push_back(t);

  struct Hit {
    std::size_t index;
    std::size_t score;
  };
  std::vector<Hit> hits;
  for (std::size_t i = 0; i < log.events.size(); ++i) {
    if (terms.empty()) {
      hits.push_back({i, 0});
      continue;
    }
    const auto text = lower(render_narrative(log.events[i]));
    std::size_t score = 0;
    bool all = true;
    for (const auto& t : terms) {
      std::size_t count = 0;
      for (auto pos = text.find(t); pos != std::string::npos; pos = text.find(t, pos + t.size())) ++count;
      all = all && count > 0;
      score += count;
    }
    if (all) hits.push_back({i, score});
  }
  std::stable_sort(hits.begin(), hits.end(), [&](const Hit& a, const Hit& b) {
    if (a.score != b.score) return a.score > b.score;
    return log.events[a.index].when > log.events[b.index].when;
  });
  if (terms.empty() && hits.size() > k) hits.resize(k);
  std::vector<Event5W3H1R> out;
  out.reserve(hits.size());
  for (const auto& h : hits) out.push_back(log.events[h.index]);
  return out;
}

Ratio Ratio::make(std::int64_t num, std::int64_t den) {
  if (den == 0) return {0, 1};
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const auto g = std::gcd(num < 0 ? -num : num, den);
  return g == 0 ? Ratio{0, 1} : Ratio{num / g, den / g};
}

Ratio data_analyst_compute(const Metric& metric, const EventLog& log) {
  const auto n = static_cast<std::int64_t>(log.events.size());
  switch (metric.kind) {
    case MetricKind::count:
      return Ratio{n, 1};
    case MetricKind::error_rate: {
      const auto failures = std::count_if(log.events.begin(), log.events.end(), [](const Event5W3H1R& e) {
        return e.result.status == ResultStatus::failure;
      });
      return n == 0 ? Ratio{0, 1} : Ratio::make(failures, n);
    }
    case MetricKind::sum: {
      Decimal total;
      for (const auto& e : log.events) {
        if (metric.field == "how_much") {
          if (e.how_much) total = total + e.how_much->magnitude;
        } else if (metric.field == "how_long") {
          if (e.how_long_ms) total = total + Decimal::from_int(*e.how_long_ms);
        } else if (metric.field == "result_value") {
          if (e.result.value) total = total + e.result.value->magnitude;
        } else {
          const auto it = e.attributes.find(metric.field);
          const auto d = it == e.attributes.end() ? std::nullopt : Decimal::parse(it->second);
          if (!d) throw Error(Errc::NonNumericField, metric.field);
          total = total + *d;
        }
      }
      std::int64_t den = 1;
      for (int i = 0; i < total.scale(); ++i) den *= 10;
      return Ratio::make(total.mantissa(), den);
    }
  }
  return {};
}

// ---------------------------------------------------------------- mock bank

void MockBank::open_account(const std::string& id, Decimal balance) {
  std::lock_guard lock(mu_);
  accounts_[id] = balance;
}

bool MockBank::has_account(const std::string& id) const {
  std::lock_guard lock(mu_);
  return accounts_.contains(id);
}

Decimal MockBank::balance(const std::string& id) const {
  std::lock_guard lock(mu_);
  const auto it = accounts_.find(id);
  if (it == accounts_.end()) throw Error(Errc::UnknownAccount, id);
  return it->second;
}

Decimal MockBank::external_sink() const {
  std::lock_guard lock(mu_);
  return sink_;
}

Decimal MockBank::total() const {
  std::lock_guard lock(mu_);
  Decimal sum = sink_;
  for (const auto& [id, bal] : accounts_) sum = sum + bal;
  return sum;
}

Json MockBank::call(const std::string& endpoint, const Json& args) {
  auto amount_arg = [&]() {
    const auto d = decimal_of(args.value("amount", Json(nullptr)));
    if (!d || *d < Decimal()) throw Error(Errc::BadQuantity, text_of(args.value("amount", Json(nullptr))));
    return *d;
  };
  auto account_arg = [&](const char* key) { return text_of(args.value(key, Json(nullptr))); };

  std::lock_guard lock(mu_);
  auto account = [&](const std::string& id) -> Decimal& {
    const auto it = accounts_.find(id);
    if (it == accounts_.end()) throw Error(Errc::UnknownAccount, id);
    return it->second;
  };

  if (endpoint == "balance") return Json{{"balance", account(account_arg("account")).to_string()}};
  if (endpoint == "verify_accounts") {
    const bool src = accounts_.contains(account_arg("src"));
    const auto dst = account_arg("dst");
    return Json{{"ok", src && !dst.empty()}};
  }
  if (endpoint == "check_funds") return Json{{"ok", account(account_arg("account")) >= amount_arg()}};
  if (endpoint == "debit") {
    Decimal& bal = account(account_arg("account"));
    const Decimal amt = amount_arg();
    if (bal < amt) throw Error(Errc::InsufficientFunds, account_arg("account"));
    bal = bal - amt;
    sink_ = sink_ + amt;
    return Json{{"balance", bal.to_string()}};
  }
  if (endpoint == "transfer") {
    const auto src = account_arg("src");
    const auto dst = account_arg("dst");
    Decimal& from = account(src);
    const Decimal amt = amount_arg();
    if (from < amt) throw Error(Errc::InsufficientFunds, src);
    from = from - amt;
    if (const auto it = accounts_.find(dst); it != accounts_.end()) {
      it->second = it->second + amt;
    } else {
      sink_ = sink_ + amt;
    }
    ++txn_counter_;
    return Json{{"txn_id", "TX-" + hex8(stable_hash(args.dump()))}};
  }
  if (endpoint == "notify") return Json{{"sent", true}};
  throw Error(Errc::UnknownEndpoint, endpoint);
}

// ---------------------------------------------------------------- agents

namespace {

class DocumentAgent final : public Agent {
 public:
  AgentOutcome invoke(const AgentTask& task) override {
    const Json& params = params_of(task);
    const auto op = params.value("op", std::string("extract"));
    if (op == "extract") {
      const auto source = params.value("source", std::string());
      const auto doc = task.inputs.find(source);
      if (doc == task.inputs.end()) return AgentOutcome::failed("no document at " + source);
      const Json& fields = params.value("fields", empty_object());
      std::vector<std::string> keys;
      for (const auto& [path, key] : fields.items()) keys.push_back(key.get<std::string>());
      try {
        const FieldMap found = document_extract(text_of(doc->second), keys);
        FieldMap out;
        for (const auto& [path, key] : fields.items()) out[path] = found.at(key.get<std::string>());
        return AgentOutcome::ok(std::move(out));
      } catch (const Error& e) {
        return AgentOutcome::failed(e.what());
      }
    }
    if (op == "record") {
      FieldMap out;
      const std::string basis = task.node->id + Json(task.inputs).dump();
      const auto prefix = params.value("prefix", std::string("DOC"));
      for (const auto& path : task.node->writes) {
        out[path] = prefix + "-" + hex8(stable_hash(path + basis));
      }
      return AgentOutcome::ok(std::move(out));
    }
    if (op == "copy") {
      FieldMap out;
      const Json map = params.value("map", empty_object());
      for (const auto& [path, from] : map.items()) {
        const auto it = task.inputs.find(from.get<std::string>());
        out[path] = it == task.inputs.end() ? Json(nullptr) : it->second;
      }
      return AgentOutcome::ok(std::move(out));
    }
    return AgentOutcome::failed("unknown document op " + op);
  }
};

class ValidationAgent final : public Agent {
 public:
  explicit ValidationAgent(std::shared_ptr<const AgentResources> res) : res_(std::move(res)) {}

  AgentOutcome invoke(const AgentTask& task) override {
    const Json& params = params_of(task);
    CheckReport report;
    if (params.contains("rules")) {
      const auto name = params.at("rules").get<std::string>();
      const auto it = res_->rule_sets.find(name);
      if (it == res_->rule_sets.end()) return AgentOutcome::failed("unknown rule set " + name);
      report = validation_check(task.inputs, it->second);
    }
    for (const auto& path : params.value("require", Json::array())) {
      const auto it = task.inputs.find(path.get<std::string>());
      if (it == task.inputs.end() || !truthy(it->second)) {
        report.violations.push_back({"REQ", "REQ", path.get<std::string>(), Severity::block});
        report.passed = false;
      }
    }
    Json codes = Json::array();
    for (const auto& v : report.violations) codes.push_back(v.code);
    const auto violations_path = params.value("violations", std::string());
    FieldMap out;
    for (const auto& path : task.node->writes) {
      out[path] = path == violations_path ? codes : Json(report.passed);
    }
    return AgentOutcome::ok(std::move(out));
  }

 private:
  std::shared_ptr<const AgentResources> res_;
};

class AuthorizationAgent final : public Agent {
 public:
  explicit AuthorizationAgent(std::shared_ptr<const AgentResources> res) : res_(std::move(res)) {}

  AgentOutcome invoke(const AgentTask& task) override {
    const Json args = resolve_args(params_of(task).value("args", empty_object()), task.inputs);
    if (args.contains("identity") && !truthy(args.at("identity"))) {
      return AgentOutcome::failed("identity not established");
    }
    const auto amount = decimal_of(args.value("amount", Json(nullptr)));
    if (!amount) return AgentOutcome::failed("request carries no amount");
    try {
      const auto decision = authorize(*amount, text_of(args.value("role", Json(nullptr))), res_->limits);
      if (decision == Decision::require_escalation) {
        return AgentOutcome::escalate("amount " + amount->to_string() + " exceeds the limit for role " +
                                      text_of(args.value("role", Json(nullptr))));
      }
    } catch (const Error& e) {
      return AgentOutcome::failed(e.what());
    }
    FieldMap out;
    for (const auto& path : task.node->writes) out[path] = true;
    return AgentOutcome::ok(std::move(out));
  }

 private:
  std::shared_ptr<const AgentResources> res_;
};

class RetrievalAgent final : public Agent {
 public:
  RetrievalAgent(std::shared_ptr<const AgentResources> res, bool render)
      : res_(std::move(res)), render_(render) {}

  AgentOutcome invoke(const AgentTask& task) override {
    const Json& params = params_of(task);
    std::string query = params.value("query", std::string());
    if (params.contains("query_field")) {
      const auto it = task.inputs.find(params.at("query_field").get<std::string>());
      if (it != task.inputs.end()) query = text_of(it->second);
    }
    const auto hits = retrieval_lookup(query, *res_->log, params.value("k", std::size_t{10}));
    Json list = Json::array();
    for (const auto& e : hits) list.push_back(render_ ? Json(render_narrative(e)) : event_to_json(e));
    FieldMap out;
    for (const auto& path : task.node->writes) out[path] = list;
    return AgentOutcome::ok(std::move(out));
  }

 private:
  std::shared_ptr<const AgentResources> res_;
  bool render_;
};

class WebSearchAgent final : public Agent {
 public:
  explicit WebSearchAgent(std::shared_ptr<const AgentResources> res) : res_(std::move(res)) {}

  AgentOutcome invoke(const AgentTask& task) override {
    const Json& params = params_of(task);
    std::string query = params.value("query", std::string());
    if (params.contains("query_field")) {
      const auto it = task.inputs.find(params.at("query_field").get<std::string>());
      if (it != task.inputs.end()) query = text_of(it->second);
    }
    std::istringstream in(query);
    std::vector<std::string> terms;
    for (std::string t; in >> t;) terms.push_back(t);
    Json list = Json::array();
    for (const auto& doc : res_->web_corpus) {
      if (std::all_of(terms.begin(), terms.end(), [&](const std::string& t) { return doc.find(t) != std::string::npos; })) {
        list.push_back(doc);
      }
    }
    FieldMap out;
    for (const auto& path : task.node->writes) out[path] = list;
    return AgentOutcome::ok(std::move(out));
  }

 private:
  std::shared_ptr<const AgentResources> res_;
};

class DataAnalystAgent final : public Agent {
 public:
  explicit DataAnalystAgent(std::shared_ptr<const AgentResources> res) : res_(std::move(res)) {}

  AgentOutcome invoke(const AgentTask& task) override {
    const Json& params = params_of(task);
    const auto name = params.value("metric", std::string("count"));
    Metric metric{MetricKind::count, params.value("field", std::string())};
    if (name == "sum") metric.kind = MetricKind::sum;
    if (name == "error_rate") metric.kind = MetricKind::error_rate;
    try {
      const Ratio r = data_analyst_compute(metric, *res_->log);
      FieldMap out;
      for (const auto& path : task.node->writes) out[path] = Json{{"num", r.num}, {"den", r.den}};
      return AgentOutcome::ok(std::move(out));
    } catch (const Error& e) {
      return AgentOutcome::failed(e.what());
    }
  }

 private:
  std::shared_ptr<const AgentResources> res_;
};

class ApiAgent final : public Agent {
 public:
  explicit ApiAgent(std::shared_ptr<const AgentResources> res) : res_(std::move(res)) {}

  AgentOutcome invoke(const AgentTask& task) override {
    const Json& params = params_of(task);
    const auto endpoint = params.value("endpoint", std::string());
    if (task.control) {
      const Json& down = task.control->value("endpoint_down", Json::array());
      if (std::find(down.begin(), down.end(), Json(endpoint)) != down.end()) {
        return AgentOutcome::failed(std::string(errc_name(Errc::EndpointDown)) + "(" + endpoint + ")");
      }
      const Json& flaky = task.control->value("fail_attempts", empty_object());
      if (flaky.contains(task.node->id) && task.attempt <= flaky.at(task.node->id).get<int>()) {
        return AgentOutcome::failed(std::string(errc_name(Errc::EndpointDown)) + "(" + endpoint + ") injected");
      }
    }
    for (const auto& path : params.value("guard", Json::array())) {
      const auto it = task.inputs.find(path.get<std::string>());
      if (it == task.inputs.end() || !truthy(it->second)) {
        FieldMap out;
        for (const auto& w : task.node->writes) out[w] = nullptr;
        return AgentOutcome::ok(std::move(out));
      }
    }
    try {
      const Json result = res_->bank->call(endpoint, resolve_args(params.value("args", empty_object()), task.inputs));
      return AgentOutcome::ok(fill_writes(*task.node, result, params));
    } catch (const Error& e) {
      return AgentOutcome::failed(e.what());
    }
  }

 private:
  std::shared_ptr<const AgentResources> res_;
};

class HumanReviewAgent final : public Agent {
 public:
  AgentOutcome invoke(const AgentTask&) override { return AgentOutcome::escalate("manual review required"); }
};

}  // namespace

std::shared_ptr<Agent> make_document_agent() { return std::make_shared<DocumentAgent>(); }
std::shared_ptr<Agent> make_validation_agent(std::shared_ptr<const AgentResources> res) {
  return std::make_shared<ValidationAgent>(std::move(res));
}
std::shared_ptr<Agent> make_authorization_agent(std::shared_ptr<const AgentResources> res) {
  return std::make_shared<AuthorizationAgent>(std::move(res));
}
std::shared_ptr<Agent> make_retrieval_agent(std::shared_ptr<const AgentResources> res, bool render_context) {
  return std::make_shared<RetrievalAgent>(std::move(res), render_context);
}
std::shared_ptr<Agent> make_web_search_agent(std::shared_ptr<const AgentResources> res) {
  return std::make_shared<WebSearchAgent>(std::move(res));
}
std::shared_ptr<Agent> make_data_analyst_agent(std::shared_ptr<const AgentResources> res) {
  return std::make_shared<DataAnalystAgent>(std::move(res));
}
std::shared_ptr<Agent> make_api_agent(std::shared_ptr<const AgentResources> res) {
  return std::make_shared<ApiAgent>(std::move(res));
}
std::shared_ptr<Agent> make_human_review_agent() { return std::make_shared<HumanReviewAgent>(); }

AgentRegistry make_default_registry(std::shared_ptr<const AgentResources> res) {
  AgentRegistry reg;
  reg.bind(AgentKind::document, make_document_agent());
  reg.bind(AgentKind::retrieval, make_retrieval_agent(res, false));
  reg.bind(AgentKind::rag, make_retrieval_agent(res, true));
  reg.bind(AgentKind::web_search, make_web_search_agent(res));
  reg.bind(AgentKind::authorization, make_authorization_agent(res));
  reg.bind(AgentKind::data_analyst, make_data_analyst_agent(res));
  reg.bind(AgentKind::reasoning, make_validation_agent(res));
  reg.bind(AgentKind::api, make_api_agent(res), /*exclusive=*/true);
  reg.bind(AgentKind::risk_control, make_validation_agent(res));
  reg.bind(AgentKind::human_review, make_human_review_agent());
  return reg;
}

}  // namespace gbpa
