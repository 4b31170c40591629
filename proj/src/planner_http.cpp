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

#include "gbpa/error.hpp"
#include "gbpa/planner.hpp"
#include "httplib.h"

namespace gbpa {

HttpPlannerProvider::HttpPlannerProvider(std::string base_url, std::chrono::milliseconds deadline, std::set<Goal> goals)
    : base_url_(std::move(base_url)), deadline_(deadline), goals_(std::move(goals)) {}

Json HttpPlannerProvider::plan(const Intent& intent, const std::vector<std::string>& context_narratives,
                               std::uint64_t seed) {
  httplib::Client client(base_url_);
  const auto sec = std::chrono::duration_cast<std::chrono::seconds>(deadline_);
  const auto usec = std::chrono::duration_cast<std::chrono::microseconds>(deadline_ - sec);
  client.set_connection_timeout(sec.count(), usec.count());
  client.set_read_timeout(sec.count(), usec.count());
  client.set_write_timeout(sec.count(), usec.count());
  const Json body{{"intent", intent.to_json()}, {"context_narratives", context_narratives}, {"seed", seed}};
  const auto res = client.Post("/plan", body.dump(), "application/json");
  if (!res) throw Error(Errc::PlanningFailed, base_url_, "provider unreachable: " + httplib::to_string(res.error()));
  if (res->status != 200) throw Error(Errc::PlanningFailed, base_url_, "provider status " + std::to_string(res->status));
  try {
    return Json::parse(res->body);
  } catch (const Json::parse_error& e) {
    throw Error(Errc::PlanningFailed, base_url_, std::string("provider body: ") + e.what());
  }
}

}  // namespace gbpa
