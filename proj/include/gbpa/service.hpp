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

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "gbpa/agents.hpp"
#include "gbpa/engine.hpp"
#include "gbpa/planner.hpp"
#include "json.hpp"

namespace httplib {
class Server;
}

namespace gbpa {

struct ServiceConfig {
  std::string token;  // empty: no authentication
  std::filesystem::path data_dir;
  std::filesystem::path store_dir;
  std::string planner_url;  // empty: templates only
  int parallelism_cap = 0;

  /// GBPA_TOKEN, GBPA_DATA_DIR, GBPA_STORE, GBPA_PLANNER_URL.
  static ServiceConfig from_env();
};

struct HttpRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
  std::string authorization;  // raw Authorization header
};

struct HttpResponse {
  int status = 200;
  Json body;
};

/// Rule sets from data/rules, every list in data/lists loaded into each of
/// them, limits.json and the accounts of bank.json.
std::shared_ptr<AgentResources> load_service_resources(const std::filesystem::path& data_dir);

/// Runs are persisted as <store>/runs/<id>.jsonl (one audit record per line)
/// plus <store>/index.jsonl (one submission per line). Constructing a Service
/// over an existing store replays both.
class Service {
 public:
  explicit Service(ServiceConfig config);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  HttpResponse handle(const HttpRequest& request);

  /// Blocks until every queued run has been dispatched and has returned.
  void drain();

 private:
  struct Record {
    std::string id;
    Json source;  // {"intent": text} | {"form": {...}} | {"spec": true}
    Json spec;
    FieldMap inputs;
    std::uint64_t seed = 0;
    std::int64_t created_ms = 0;
    std::string error;  // dispatch failure
  };

  HttpResponse submit_run(const std::string& body);
  HttpResponse get_run(const std::string& id) const;
  HttpResponse get_audit(const std::string& id) const;
  HttpResponse list_runs() const;
  HttpResponse list_tickets(const std::map<std::string, std::string>& query) const;
  HttpResponse post_decision(const std::string& ticket_id, const std::string& body);
  HttpResponse metrics() const;

  Json run_json(const Record& record) const;
  void persist(const AuditRecord& record);
  void append_index(const Record& record);
  void replay_store();
  void worker_loop();
  void dispatch(const std::string& id);

  ServiceConfig config_;
  std::shared_ptr<AgentResources> resources_;
  TemplateLibrary templates_;
  std::unique_ptr<PlannerProvider> provider_;
  std::unique_ptr<Engine> engine_;

  mutable std::mutex mu_;
  std::map<std::string, Record> records_;
  std::uint64_t next_id_ = 1;
  std::mutex store_mu_;
  std::mutex decision_mu_;

  std::deque<std::string> queue_;
  std::condition_variable queue_cv_;
  std::condition_variable idle_cv_;
  bool busy_ = false;
  bool stopping_ = false;
  std::thread worker_;
};

/// Routes every request of `server` through service.handle.
void mount(Service& service, httplib::Server& server);

/// Listens on "host:port" until the process is stopped; returns an exit code.
int serve_forever(Service& service, const std::string& addr);

}  // namespace gbpa
