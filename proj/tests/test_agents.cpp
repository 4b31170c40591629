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

#include <fstream>

#include "doctest.h"
#include "gbpa/agents.hpp"
#include "gbpa/error.hpp"
#include "gbpa/sim_harness.hpp"
#include "support/support.hpp"

using namespace gbpa;

namespace {

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return Errc::Io;
}

Decimal dec(const char* s) { return *Decimal::parse(s); }

LimitTable limits() {
  std::ifstream in(default_data_dir() / "limits.json");
  return LimitTable::from_json(Json::parse(in));
}

RuleSet aml_rules() {
  RuleSet set;
  for (const char* name : {"blacklist", "aml"}) {
    std::ifstream in(default_data_dir() / "rules" / (std::string(name) + ".json"));
    const auto part = RuleSet::from_json(Json::parse(in));
    set.rules.insert(set.rules.end(), part.rules.begin(), part.rules.end());
  }
  set.load_list("blacklist", default_data_dir() / "lists" / "blacklist.txt");
  set.load_list("aml_watchlist", default_data_dir() / "lists" / "aml_watchlist.txt");
  return set;
}

EventLog deposit_log() {
  std::ifstream in(default_data_dir() / "fixtures" / "deposit_mapping.json");
  return load_event_log(default_data_dir() / "fixtures" / "deposit.csv", FieldMapping::from_json(Json::parse(in)));
}

EventLog amounts_log(const std::vector<std::string>& amounts) {
  EventLog log;
  for (std::size_t i = 0; i < amounts.size(); ++i) {
    Event5W3H1R e;
    e.who.id = "c" + std::to_string(i);
    e.what = "T";
    e.why = "p";
    e.how = "x";
    e.when = Timestamp{static_cast<std::int64_t>(i) * 1000};
    e.how_much = Quantity{dec(amounts[i].c_str()), "USD"};
    e.attributes["fee"] = amounts[i];
    log.events.push_back(e);
  }
  return log;
}

NodeSpec api_node(const std::string& id, const std::string& endpoint, std::vector<std::string> writes) {
  NodeSpec n;
  n.id = id;
  n.agent_kind = AgentKind::api;
  n.effectful = true;
  n.writes = {writes.begin(), writes.end()};
  n.params = Json{{"endpoint", endpoint}};
  return n;
}

}  // namespace

TEST_CASE("document extraction returns the schema keys") {
  const auto fields = document_extract("amount: 100\nsrc: ACC-1\nnoise line\ndst : ACC-2 \n", {"amount", "dst"});
  CHECK(fields.size() == 2);
  CHECK(fields.at("amount") == "100");
  CHECK(fields.at("dst") == "ACC-2");
  try {
    document_extract("amount: 100\n", {"amount", "src", "dst"});
    FAIL("expected ExtractionFailed");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ExtractionFailed);
    CHECK(e.subject() == "src,dst");
  }
  CHECK(code_of([] { document_extract("src:\n", {"src"}); }) == Errc::ExtractionFailed);
}

TEST_CASE("blacklisted counterparty fails AML-001") {
  const auto rules = aml_rules();
  const auto report = validation_check({{"req.counterparty", "EXT-SANC-01"}, {"req.amount", "10"}}, rules);
  CHECK_FALSE(report.passed);
  REQUIRE(report.violations.size() == 1);
  CHECK(report.violations[0].rule_id == "AML-001");
  CHECK(validation_check({{"req.counterparty", "ACC-2"}, {"req.amount", "10"}}, rules).passed);
}

TEST_CASE("warn severity does not block") {
  const auto report = validation_check({{"req.counterparty", "ACC-2"}, {"req.amount", "2000000"}}, aml_rules());
  CHECK(report.passed);
  REQUIRE(report.violations.size() == 1);
  CHECK(report.violations[0].severity == Severity::warn);
}

TEST_CASE("malformed tax id fails INV-003") {
  const auto scenario = load_scenario(default_data_dir(), "reimbursement");
  const auto& rules = scenario.resources->rule_sets.at("pre_audit");
  FieldMap claim{{"claim.amount", "10.00"},     {"claim.invoice_amount", "10.00"}, {"claim.budget", "100"},
                 {"claim.receipt", "R-X1"},     {"claim.tax_id", "12-345"},        {"claim.vendor", "VND-0001"},
                 {"approval.granted", true}};
  const auto report = validation_check(claim, rules);
  REQUIRE(report.violations.size() == 1);
  CHECK(report.violations[0].rule_id == "INV-003");
  claim["claim.tax_id"] = "12-3456789";
  CHECK(validation_check(claim, rules).passed);
}

TEST_CASE("invalid rules are rejected") {
  CHECK(code_of([] {
          RuleSet::from_json(Json{{"rules", Json::array({Json{{"id", "A"}, {"field", "f"}, {"predicate", {{"op", "~"}}}}})}});
        }) == Errc::InvalidRule);
  const Json dup{{"id", "A"}, {"field", "f"}, {"predicate", {{"op", "present"}}}};
  CHECK(code_of([&] { RuleSet::from_json(Json{{"rules", Json::array({dup, dup})}}); }) == Errc::InvalidRule);
}

TEST_CASE("adding rules never removes violations") {
  testing::Gen g(31);
  const std::vector<std::string> ops{"<=", ">=", "==", "!=", "present", "truthy", "in", "not_in"};
  const std::vector<std::string> fields{"a", "b", "c"};
  const std::vector<Json> values{Json(1), Json(5), Json("x"), Json(""), Json(true), Json(nullptr)};
  auto random_rule = [&](int k) {
    Json pred{{"op", ops[g.below(ops.size())]}};
    if (pred["op"] == "in" || pred["op"] == "not_in") {
      pred["values"] = Json::array({values[g.below(values.size())], values[g.below(values.size())]});
    } else {
      pred["value"] = values[g.below(values.size())];
    }
    return Json{{"id", "R" + std::to_string(k)}, {"field", fields[g.below(fields.size())]}, {"predicate", pred}};
  };
  for (int i = 0; i < 1000; ++i) {
    Json small = Json::array();
    const int n = g.between(0, 4);
    for (int k = 0; k < n; ++k) small.push_back(random_rule(k));
    Json big = small;
    for (int k = n; k < n + g.between(0, 4); ++k) big.push_back(random_rule(k));
    FieldMap fm;
    for (const auto& f : fields) {
      if (g.chance(80)) fm[f] = values[g.below(values.size())];
    }
    const auto a = validation_check(fm, RuleSet::from_json(Json{{"rules", small}}));
    const auto b = validation_check(fm, RuleSet::from_json(Json{{"rules", big}}));
    for (const auto& v : a.violations) {
      CHECK(std::find(b.violations.begin(), b.violations.end(), v) != b.violations.end());
    }
    if (!a.passed) CHECK_FALSE(b.passed);
  }
}

TEST_CASE("authorization limits are inclusive") {
  const auto table = limits();
  CHECK(authorize(dec("100"), "clerk", table) == Decision::approve);
  CHECK(authorize(dec("1000"), "clerk", table) == Decision::approve);
  CHECK(authorize(dec("1000.01"), "clerk", table) == Decision::require_escalation);
  CHECK(authorize(dec("50000"), "clerk", table) == Decision::require_escalation);
  try {
    authorize(dec("1"), "intern", table);
    FAIL("expected UnknownRole");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::UnknownRole);
    CHECK(e.subject() == "intern");
  }
}

TEST_CASE("retrieval over the deposit fixture") {
  const auto log = deposit_log();
  const auto hits = retrieval_lookup("deposit USD", log, 10);
  REQUIRE_FALSE(hits.empty());
  for (const auto& e : hits) {
    const auto text = render_narrative(e);
    CHECK(text.find("deposit") != std::string::npos);
    CHECK(text.find("USD") != std::string::npos);
  }
  CHECK(retrieval_lookup("zzzunmatched", log, 10).empty());
}

TEST_CASE("empty query gives the most recent events") {
  const auto log = deposit_log();
  const auto hits = retrieval_lookup("", log, 2);
  REQUIRE(hits.size() == std::min<std::size_t>(2, log.events.size()));
  auto sorted = log.events;
  std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.when > b.when; });
  for (std::size_t i = 0; i < hits.size(); ++i) CHECK(hits[i].when == sorted[i].when);
}

TEST_CASE("data analyst metrics are exact") {
  CHECK(data_analyst_compute({MetricKind::count, ""}, EventLog{}) == Ratio{0, 1});
  CHECK(data_analyst_compute({MetricKind::error_rate, ""}, EventLog{}) == Ratio{0, 1});
  const auto log = amounts_log({"100", "50"});
  CHECK(data_analyst_compute({MetricKind::sum, "how_much"}, log) == Ratio{150, 1});
  CHECK(data_analyst_compute({MetricKind::sum, "fee"}, amounts_log({"0.1", "0.2"})) == Ratio{3, 10});
  auto bad = log;
  bad.events[1].attributes["fee"] = "n/a";
  CHECK(code_of([&] { data_analyst_compute({MetricKind::sum, "fee"}, bad); }) == Errc::NonNumericField);
}

TEST_CASE("defect corpus error rate") {
  const auto rows = read_raw_records(default_data_dir() / "scenarios" / "reimbursement" / "defects.csv");
  EventLog log;
  for (const auto& row : rows) {
    Event5W3H1R e;
    e.who.id = row.at("employee");
    e.what = "claim";
    e.why = "reimbursement";
    e.how = "claim";
    e.result.status = row.at("defect") == "none" ? ResultStatus::success : ResultStatus::failure;
    log.events.push_back(e);
  }
  const auto rate = data_analyst_compute({MetricKind::error_rate, ""}, log);
  CHECK(rate == Ratio::make(126, 1000));
  CHECK(rate.to_double() == doctest::Approx(0.126));
}

TEST_CASE("every defect class is caught by its own rule") {
  const auto scenario = load_scenario(default_data_dir(), "reimbursement");
  const auto& rules = scenario.resources->rule_sets.at("pre_audit");
  const std::map<std::string, std::set<std::string>> expected{
      {"none", {}},
      {"malformed_tax_id", {"INV-003"}},
      {"amount_mismatch", {"INV-002"}},
      {"over_budget", {"BUD-001"}},
      {"duplicate_receipt", {"INV-004"}},
      {"blacklisted_vendor", {"VEN-001"}},
      {"miscoded_category", {}},
  };
  std::map<std::string, int> per_class;
  const auto rows = read_raw_records(default_data_dir() / "scenarios" / "reimbursement" / "defects.csv");
  for (const auto& row : rows) {
    FieldMap claim{{"approval.granted", true}};
    for (const char* key : {"amount", "invoice_amount", "budget", "receipt", "tax_id", "vendor", "category"}) {
      claim["claim." + std::string(key)] = row.at(key);
    }
    const auto report = validation_check(claim, rules);
    std::set<std::string> fired;
    for (const auto& v : report.violations) fired.insert(v.rule_id);
    const auto& defect = row.at("defect");
    REQUIRE(expected.contains(defect));
    CHECK_MESSAGE(fired == expected.at(defect), row.at("claim_id"));
    ++per_class[defect];
  }
  CHECK(per_class["none"] == 874);
  CHECK(per_class["malformed_tax_id"] == 40);
  CHECK(per_class["amount_mismatch"] == 30);
  CHECK(per_class["over_budget"] == 24);
  CHECK(per_class["duplicate_receipt"] == 16);
  CHECK(per_class["blacklisted_vendor"] == 8);
  CHECK(per_class["miscoded_category"] == 8);
}

TEST_CASE("mock bank debit and overdraft") {
  MockBank bank;
  bank.open_account("A", dec("500"));
  CHECK(bank.call("debit", {{"account", "A"}, {"amount", "100"}}).at("balance") == "400");
  CHECK(bank.balance("A") == dec("400"));
  CHECK(code_of([&] { bank.call("debit", {{"account", "A"}, {"amount", "400.01"}}); }) == Errc::InsufficientFunds);
  CHECK(bank.balance("A") == dec("400"));
  CHECK(code_of([&] { bank.call("debit", {{"account", "B"}, {"amount", "1"}}); }) == Errc::UnknownAccount);
  CHECK(code_of([&] { bank.call("mint", Json::object()); }) == Errc::UnknownEndpoint);
  CHECK(code_of([&] { bank.call("debit", {{"account", "A"}, {"amount", "-1"}}); }) == Errc::BadQuantity);
}

TEST_CASE("money is conserved under random operations") {
  testing::Gen g(77);
  for (int round = 0; round < 200; ++round) {
    MockBank bank;
    const std::vector<std::string> ids{"A", "B", "C"};
    for (const auto& id : ids) bank.open_account(id, Decimal::from_int(static_cast<std::int64_t>(g.below(1000))));
    const Decimal start = bank.total();
    for (int op = 0; op < 30; ++op) {
      const auto amount = std::to_string(g.below(600)) + "." + std::to_string(g.below(100));
      const auto src = ids[g.below(3)];
      const auto dst = g.chance(20) ? std::string("EXT-9") : ids[g.below(3)];
      try {
        if (g.chance(50)) {
          bank.call("transfer", {{"src", src}, {"dst", dst}, {"amount", amount}});
        } else {
          bank.call("debit", {{"account", src}, {"amount", amount}});
        }
      } catch (const Error& e) {
        CHECK(e.code() == Errc::InsufficientFunds);
      }
      CHECK(bank.total() == start);
      for (const auto& id : ids) CHECK(bank.balance(id) >= Decimal());
    }
  }
}

TEST_CASE("api agent honours injected outages") {
  auto res = std::make_shared<AgentResources>();
  res->bank->open_account("A", dec("10"));
  const auto agent = make_api_agent(res);
  NodeSpec node = api_node("bal", "balance", {"acct.balance"});
  node.params["args"] = {{"account", {{"const", "A"}}}};
  AgentTask task;
  task.node = &node;
  task.kind = AgentKind::api;
  task.params = &node.params;
  auto outcome = agent->invoke(task);
  REQUIRE(outcome.kind == OutcomeKind::ok);
  CHECK(outcome.outputs.at("acct.balance") == "10");

  const Json down{{"endpoint_down", {"balance"}}};
  task.control = &down;
  outcome = agent->invoke(task);
  CHECK(outcome.kind == OutcomeKind::failed);
  CHECK(outcome.reason.find("EndpointDown") != std::string::npos);

  const Json flaky{{"fail_attempts", {{"bal", 2}}}};
  task.control = &flaky;
  task.attempt = 2;
  CHECK(agent->invoke(task).kind == OutcomeKind::failed);
  task.attempt = 3;
  CHECK(agent->invoke(task).kind == OutcomeKind::ok);
}

TEST_CASE("authorization agent escalates over the limit") {
  auto res = std::make_shared<AgentResources>();
  res->limits = limits();
  const auto agent = make_authorization_agent(res);
  NodeSpec node;
  node.id = "auth";
  node.agent_kind = AgentKind::authorization;
  node.writes = {"auth.ok"};
  node.params = Json{{"args", {{"amount", "req.amount"}, {"role", {{"const", "clerk"}}}}}};
  AgentTask task;
  task.node = &node;
  task.kind = AgentKind::authorization;
  task.params = &node.params;
  task.inputs = {{"req.amount", "100"}};
  CHECK(agent->invoke(task).kind == OutcomeKind::ok);
  task.inputs = {{"req.amount", "50000"}};
  CHECK(agent->invoke(task).kind == OutcomeKind::escalate);
}

TEST_CASE("registry check finds unbound kinds") {
  AgentRegistry reg;
  reg.bind(AgentKind::document, make_document_agent());
  CHECK(code_of([&] { reg.bind(AgentKind::document, make_document_agent()); }) == Errc::InvalidSpec);
  ProcessSpec spec;
  spec.id = "s";
  NodeSpec a;
  a.id = "a";
  a.agent_kind = AgentKind::document;
  spec.nodes.push_back(a);
  CHECK_NOTHROW(reg.check(spec));
  NodeSpec b = a;
  b.id = "b";
  b.agent_kind = AgentKind::web_search;
  spec.nodes.push_back(b);
  try {
    reg.check(spec);
    FAIL("expected UnboundAgent");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::UnboundAgent);
    CHECK(e.subject() == "web_search");
  }
  CHECK_NOTHROW(make_default_registry(std::make_shared<AgentResources>()).check(spec));
}
