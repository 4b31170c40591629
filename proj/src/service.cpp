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

#include "gbpa/service.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <regex>

#include "gbpa/error.hpp"
#include "gbpa/graph.hpp"
#include "httplib.h"

namespace gbpa {

namespace fs = std::filesystem;

namespace {

std::string env(const char* name) {
  const char* v = std::getenv(name);
  return v ? v : "";
}

HttpResponse error_response(int status, std::string code, const std::string& detail) {
  return {status, Json{{"code", std::move(code)}, {"detail", detail}}};
}

HttpResponse error_response(int status, const Error& e) {
  return error_response(status, std::string(errc_name(e.code())), e.what());
}

int status_for(Errc code) {
  switch (code) {
    case Errc::UnknownRun:
    case Errc::TicketNotFound:
      return 404;
    case Errc::AlreadyResolved:
      return 409;
    case Errc::UnrecognizedIntent:
    case Errc::MissingEntity:
    case Errc::MissingField:
      return 400;
    default:
      return 422;
  }
}

std::vector<fs::path> sorted_files(const fs::path& dir, const std::string& ext) {
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ext) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

Json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, path.string());
  return Json::parse(in);
}

std::uint64_t id_number(const std::string& id) {
  const auto dash = id.rfind('-');
  return dash == std::string::npos ? 0 : std::strtoull(id.c_str() + dash + 1, nullptr, 10);
}

std::string run_id_for(std::uint64_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "run-%06llu", static_cast<unsigned long long>(n));
  return buf;
}

std::vector<AuditRecord> read_trail(const fs::path& path) {
  std::vector<AuditRecord> trail;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      trail.push_back(audit_from_json(Json::parse(line)));
    } catch (const std::exception&) {
      break;  // torn final line from a crash
    }
  }
  return trail;
}

bool bearer_ok(const std::string& header, const std::string& token) {
  static const std::string prefix = "Bearer ";
  return header.size() == prefix.size() + token.size() && header.compare(0, prefix.size(), prefix) == 0 &&
         header.compare(prefix.size(), std::string::npos, token) == 0;
}

}  // namespace

ServiceConfig ServiceConfig::from_env() {
  ServiceConfig c;
  c.token = env("GBPA_TOKEN");
  c.data_dir = env("GBPA_DATA_DIR").empty() ? fs::path(GBPA_DATA_DIR) : fs::path(env("GBPA_DATA_DIR"));
  c.store_dir = env("GBPA_STORE").empty() ? fs::path("gbpa-store") : fs::path(env("GBPA_STORE"));
  c.planner_url = env("GBPA_PLANNER_URL");
  return c;
}

std::shared_ptr<AgentResources> load_service_resources(const fs::path& data_dir) {
  auto res = std::make_shared<AgentResources>();
  const auto lists = sorted_files(data_dir / "lists", ".txt");
  for (const auto& path : sorted_files(data_dir / "rules", ".json")) {
    RuleSet rules = RuleSet::from_json(read_json_file(path));
    for (const auto& list : lists) rules.load_list(list.stem().string(), list);
    res->rule_sets.emplace(path.stem().string(), std::move(rules));
  }
  if (fs::exists(data_dir / "limits.json")) res->limits = LimitTable::from_json(read_json_file(data_dir / "limits.json"));
  if (fs::exists(data_dir / "bank.json")) {
    const Json bank = read_json_file(data_dir / "bank.json");
    for (const auto& [id, balance] : bank.at("accounts").items()) {
      const auto d = Decimal::parse(balance.get<std::string>());
      if (!d) throw Error(Errc::BadQuantity, id);
      res->bank->open_account(id, *d);
    }
  }
  return res;
}

Service::Service(ServiceConfig config) : config_(std::move(config)) {
  resources_ = load_service_resources(config_.data_dir);
  templates_ = TemplateLibrary::load(config_.data_dir / "templates");
  if (!config_.planner_url.empty()) provider_ = std::make_unique<HttpPlannerProvider>(config_.planner_url);
  engine_ = std::make_unique<Engine>(make_default_registry(resources_),
                                     [this](const AuditRecord& r) { persist(r); });
  fs::create_directories(config_.store_dir / "runs");
  replay_store();
  worker_ = std::thread([this] { worker_loop(); });
}

Service::~Service() {
  {
    std::lock_guard lock(mu_);
    stopping_ = true;
  }
  queue_cv_.notify_all();
  worker_.join();
}

void Service::persist(const AuditRecord& record) {
  std::lock_guard lock(store_mu_);
  std::ofstream out(config_.store_dir / "runs" / (record.run + ".jsonl"), std::ios::app | std::ios::binary);
  out << audit_to_json(record).dump() << "\n";
}

void Service::append_index(const Record& r) {
  std::lock_guard lock(store_mu_);
  std::ofstream out(config_.store_dir / "index.jsonl", std::ios::app | std::ios::binary);
  out << Json{{"id", r.id},       {"source", r.source},         {"spec", r.spec},
              {"inputs", r.inputs}, {"seed", r.seed}, {"created_ms", r.created_ms}}
             .dump()
      << "\n";
}

void Service::replay_store() {
  std::ifstream in(config_.store_dir / "index.jsonl");
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Json doc;
    try {
      doc = Json::parse(line);
    } catch (const Json::parse_error&) {
      break;
    }
    Record r;
    r.id = doc.at("id").get<std::string>();
    r.source = doc.at("source");
    r.spec = doc.at("spec");
    r.inputs = doc.at("inputs").get<FieldMap>();
    r.seed = doc.at("seed").get<std::uint64_t>();
    r.created_ms = doc.at("created_ms").get<std::int64_t>();
    next_id_ = std::max(next_id_, id_number(r.id) + 1);
    const auto trail = read_trail(config_.store_dir / "runs" / (r.id + ".jsonl"));
    if (trail.empty()) queue_.push_back(r.id);
    else engine_->restore(trail, std::make_shared<WallClock>());
    records_[r.id] = std::move(r);
  }
}

void Service::worker_loop() {
  for (;;) {
    std::string id;
    {
      std::unique_lock lock(mu_);
      queue_cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
      if (stopping_) return;
      id = queue_.front();
      queue_.pop_front();
      busy_ = true;
    }
    dispatch(id);
    {
      std::lock_guard lock(mu_);
      busy_ = false;
    }
    idle_cv_.notify_all();
  }
}

void Service::dispatch(const std::string& id) {
  Record r;
  {
    std::lock_guard lock(mu_);
    r = records_.at(id);
  }
  try {
    const ExecutionGraph graph = build_execution_graph(parse_spec(r.spec));
    ExecuteOptions options;
    options.run_id = id;
    options.parallelism_cap = config_.parallelism_cap;
    engine_->execute(graph, r.inputs, std::make_shared<WallClock>(), r.seed, options);
  } catch (const std::exception& e) {
    std::lock_guard lock(mu_);
    records_.at(id).error = e.what();
  }
}

void Service::drain() {
  std::unique_lock lock(mu_);
  idle_cv_.wait(lock, [&] { return stopping_ || (queue_.empty() && !busy_); });
}

HttpResponse Service::handle(const HttpRequest& req) {
  if (req.method == "GET" && req.path == "/health") return {200, Json{{"status", "ok"}}};
  if (!config_.token.empty() && !bearer_ok(req.authorization, config_.token)) {
    return error_response(401, "Unauthorized", "missing or wrong bearer token");
  }
  static const std::regex run_re(R"(^/runs/([A-Za-z0-9_-]+)$)");
  static const std::regex audit_re(R"(^/runs/([A-Za-z0-9_-]+)/audit$)");
  static const std::regex decision_re(R"(^/tickets/([A-Za-z0-9_-]+)/decision$)");
  std::smatch m;
  try {
    if (req.path == "/runs") {
      if (req.method == "POST") return submit_run(req.body);
      if (req.method == "GET") return list_runs();
    } else if (std::regex_match(req.path, m, run_re)) {
      if (req.method == "GET") return get_run(m[1]);
    } else if (std::regex_match(req.path, m, audit_re)) {
      if (req.method == "GET") return get_audit(m[1]);
    } else if (req.path == "/tickets") {
      if (req.method == "GET") return list_tickets(req.query);
    } else if (std::regex_match(req.path, m, decision_re)) {
      if (req.method == "POST") return post_decision(m[1], req.body);
    } else if (req.path == "/metrics") {
      if (req.method == "GET") return metrics();
    } else {
      return error_response(404, "NotFound", req.path);
    }
    return error_response(405, "MethodNotAllowed", req.method + " " + req.path);
  } catch (const Error& e) {
    return error_response(status_for(e.code()), e);
  } catch (const std::exception& e) {
    return error_response(500, "Internal", e.what());
  }
}

HttpResponse Service::submit_run(const std::string& body) {
  Record r;
  Json doc;
  const auto first = body.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return error_response(400, "EmptyBody", "expected an intent or a spec");
  if (body[first] == '{') {
    try {
      doc = Json::parse(body);
    } catch (const Json::parse_error& e) {
      return error_response(400, "BadJson", e.what());
    }
  } else {
    doc = Json{{"intent", body}};
  }

  std::optional<FieldMap> inputs;
  if (doc.contains("inputs")) {
    if (!doc.at("inputs").is_object()) return error_response(400, "BadInputs", "inputs must be an object");
    inputs = doc.at("inputs").get<FieldMap>();
  }
  ProcessSpec spec;
  try {
    if (doc.contains("spec")) {
      if (!doc.at("spec").is_object()) return error_response(400, "BadSpec", "spec must be an object");
      spec = parse_spec(doc.at("spec"));
      validate_spec(spec);
      r.source = Json{{"spec", true}};
    } else if (doc.contains("intent") && doc.at("intent").is_string()) {
      const Intent intent = extract_intent(std::string_view(doc.at("intent").get_ref<const std::string&>()));
      spec = plan_with_provider(intent, {}, provider_.get(), templates_, doc.value("seed", std::uint64_t{0}));
      r.source = Json{{"intent", doc.at("intent")}};
    } else if (doc.contains("form") && doc.at("form").is_object()) {
      const Intent intent = extract_intent(doc.at("form"));
      spec = plan_with_provider(intent, {}, provider_.get(), templates_, doc.value("seed", std::uint64_t{0}));
      r.source = Json{{"form", doc.at("form")}};
    } else {
      return error_response(400, "BadBody", "expected \"intent\", \"form\" or \"spec\"");
    }
    make_default_registry(resources_).check(spec);
    check_write_conflicts(build_execution_graph(spec));
  } catch (const Error& e) {
    return error_response(status_for(e.code()), e);
  }

  r.spec = spec_to_json(spec);
  r.inputs = inputs ? *inputs : bound_inputs(spec);
  r.created_ms = WallClock().now_ms();
  {
    std::lock_guard lock(mu_);
    const auto n = next_id_++;
    r.id = run_id_for(n);
    r.seed = doc.value("seed", n);
    append_index(r);
    records_[r.id] = r;
    queue_.push_back(r.id);
  }
  queue_cv_.notify_all();
  return {202, Json{{"run_id", r.id}, {"status", "pending"}}};
}

Json Service::run_json(const Record& r) const {
  Json doc{{"run_id", r.id},
           {"spec_id", r.spec.value("id", std::string())},
           {"source", r.source},
           {"created_ms", r.created_ms},
           {"audit", "runs/" + r.id + ".jsonl"}};
  std::optional<RunResult> snap;
  try {
    snap = engine_->snapshot(r.id);
  } catch (const Error& e) {
    if (e.code() != Errc::UnknownRun) throw;
  }
  if (!snap) {
    doc["status"] = r.error.empty() ? "pending" : "failed";
    if (!r.error.empty()) doc["error"] = r.error;
    doc["updated_ms"] = r.created_ms;
    doc["state"] = nullptr;
    doc["tickets"] = Json::array();
    doc["elapsed_ms"] = nullptr;
    return doc;
  }
  const RunState& s = snap->state;
  doc["status"] = to_string(s.status);
  doc["updated_ms"] = snap->trail.empty() ? r.created_ms : snap->trail.back().ts;
  doc["state"] = run_state_to_json(s);
  Json tickets = Json::array();
  for (const auto& t : snap->tickets) tickets.push_back(ticket_to_json(t));
  doc["tickets"] = tickets;
  doc["elapsed_ms"] = s.finished_ms >= 0 ? Json(s.finished_ms - s.started_ms) : Json(nullptr);
  return doc;
}

HttpResponse Service::get_run(const std::string& id) const {
  Record r;
  {
    std::lock_guard lock(mu_);
    const auto it = records_.find(id);
    if (it == records_.end()) return error_response(404, "UnknownRun", id);
    r = it->second;
  }
  return {200, run_json(r)};
}

HttpResponse Service::get_audit(const std::string& id) const {
  {
    std::lock_guard lock(mu_);
    if (!records_.contains(id)) return error_response(404, "UnknownRun", id);
  }
  Json out = Json::array();
  try {
    for (const auto& rec : engine_->audit_trail(id)) out.push_back(audit_to_json(rec));
  } catch (const Error& e) {
    if (e.code() != Errc::UnknownRun) throw;
  }
  return {200, out};
}

HttpResponse Service::list_runs() const {
  std::vector<Record> all;
  {
    std::lock_guard lock(mu_);
    for (const auto& [id, r] : records_) all.push_back(r);
  }
  Json out = Json::array();
  for (const auto& r : all) {
    const Json doc = run_json(r);
    out.push_back({{"run_id", r.id}, {"spec_id", doc.at("spec_id")}, {"status", doc.at("status")},
                   {"created_ms", r.created_ms}, {"updated_ms", doc.at("updated_ms")}});
  }
  return {200, out};
}

HttpResponse Service::list_tickets(const std::map<std::string, std::string>& query) const {
  std::string state;
  if (const auto it = query.find("state"); it != query.end()) state = it->second;
  if (!state.empty() && state != "open" && state != "resolved") {
    return error_response(400, "BadFilter", "state must be open or resolved");
  }
  Json out = Json::array();
  for (const auto& t : engine_->tickets()) {
    if (state == "open" && t.resolved) continue;
    if (state == "resolved" && !t.resolved) continue;
    out.push_back(ticket_to_json(t));
  }
  return {200, out};
}

HttpResponse Service::post_decision(const std::string& ticket_id, const std::string& body) {
  Json doc;
  try {
    doc = Json::parse(body);
  } catch (const Json::parse_error& e) {
    return error_response(400, "BadJson", e.what());
  }
  if (!doc.is_object() || !doc.contains("decision") || !doc.at("decision").is_string()) {
    return error_response(400, "BadDecision", "expected {\"decision\": retry|skip_with_value|abort}");
  }
  const auto kind = parse_decision_kind(doc.at("decision").get<std::string>());
  if (!kind) return error_response(400, "BadDecision", doc.at("decision").get<std::string>());
  HumanDecision decision{*kind, doc.value("value", Json::object())};
  RunResult result;
  {
    // one resolution at a time; the engine rejects the second with AlreadyResolved
    std::lock_guard lock(decision_mu_);
    result = engine_->resolve_escalation(ticket_id, decision, doc.value("resolver", std::string("console")),
                                         doc.value("comment", std::string()));
  }
  Record r;
  {
    std::lock_guard lock(mu_);
    r = records_.at(result.state.run_id);
  }
  return {200, Json{{"ticket", ticket_id}, {"run", run_json(r)}}};
}

HttpResponse Service::metrics() const {
  std::vector<Record> all;
  {
    std::lock_guard lock(mu_);
    for (const auto& [id, r] : records_) all.push_back(r);
  }
  std::map<std::string, int> by_status{{"pending", 0},   {"running", 0}, {"suspended", 0},
                                       {"succeeded", 0}, {"aborted", 0}, {"failed", 0}};
  std::map<std::string, std::pair<std::int64_t, std::int64_t>> makespan;  // spec id -> (sum, n)
  for (const auto& r : all) {
    const Json doc = run_json(r);
    ++by_status[doc.at("status").get<std::string>()];
    if (doc.at("status") == "succeeded" && !doc.at("elapsed_ms").is_null()) {
      auto& [sum, n] = makespan[doc.at("spec_id").get<std::string>()];
      sum += doc.at("elapsed_ms").get<std::int64_t>();
      ++n;
    }
  }
  int open = 0;
  int resolved = 0;
  for (const auto& t : engine_->tickets()) (t.resolved ? resolved : open) += 1;
  Json means = Json::object();
  for (const auto& [spec, sn] : makespan) means[spec] = sn.first / sn.second;
  Json out{{"runs_total", all.size()}, {"tickets_open", open}, {"tickets_resolved", resolved},
           {"mean_makespan_ms", means}};
  for (const auto& [status, n] : by_status) out["runs_" + status] = n;
  return {200, out};
}

void mount(Service& service, httplib::Server& server) {
  auto handler = [&service](const httplib::Request& req, httplib::Response& res) {
    HttpRequest r;
    r.method = req.method;
    r.path = req.path;
    for (const auto& [k, v] : req.params) r.query[k] = v;
    r.body = req.body;
    r.authorization = req.get_header_value("Authorization");
    const HttpResponse out = service.handle(r);
    res.status = out.status;
    res.set_content(out.body.dump(), "application/json");
  };
  server.Get(R"(/.*)", handler);
  server.Post(R"(/.*)", handler);
  server.Put(R"(/.*)", handler);
  server.Delete(R"(/.*)", handler);
}

int serve_forever(Service& service, const std::string& addr) {
  const auto colon = addr.rfind(':');
  if (colon == std::string::npos) throw Error(Errc::InvalidSpec, addr, "address must be host:port");
  const std::string host = addr.substr(0, colon);
  const int port = std::atoi(addr.c_str() + colon + 1);
  httplib::Server server;
  mount(service, server);
  std::cerr << "gbpa: listening on " << host << ":" << port << "\n";
  return server.listen(host, port) ? 0 : 1;
}

}  // namespace gbpa
