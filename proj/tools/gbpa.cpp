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

// gbpa: scenario simulation, fixture generation, report comparison and the
// HTTP service.

#include <cstdlib>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "gbpa/error.hpp"
#include "gbpa/service.hpp"
#include "gbpa/sim_harness.hpp"

namespace {

constexpr int kScenarioFailure = 2;
constexpr int kAssetError = 3;

nlohmann::json read_slice(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw gbpa::Error(gbpa::Errc::Io, path, "cannot open");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw gbpa::Error(gbpa::Errc::Io, path, e.what());
  }
}

bool is_asset_error(gbpa::Errc code) {
  return code == gbpa::Errc::ScenarioAssetsMissing || code == gbpa::Errc::Io || code == gbpa::Errc::NoTemplate;
}

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v && *v ? v : fallback;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Goal-driven business process automation: simulation, reports and service"};
  app.require_subcommand(1);

  std::string data_dir = gbpa::default_data_dir().string();
  app.add_option("--data", data_dir, "Data directory (templates, rules, scenarios)");

  std::string scenario;
  std::uint64_t seed = 42;
  std::string out_dir = "out";
  auto* simulate = app.add_subcommand("simulate", "Run a scenario before and after optimization");
  simulate->add_option("--scenario", scenario, "wire_transfer or reimbursement")->required();
  simulate->add_option("--seed", seed, "Simulation seed");
  simulate->add_option("--out", out_dir, "Output directory");
  bool quiet = false;
  simulate->add_flag("-q,--quiet", quiet, "Do not print the report table");

  auto* fixtures = app.add_subcommand("fixtures", "Regenerate a scenario's synthetic fixture files");
  fixtures->add_option("--scenario", scenario, "Scenario name")->required();
  fixtures->add_option("--seed", seed, "Generator seed");

  std::string before_path;
  std::string after_path;
  std::string format = "table";
  auto* report = app.add_subcommand("report", "Compare two result slices");
  report->add_option("--before", before_path, "Baseline slice (baseline.json)")->required();
  report->add_option("--after", after_path, "Optimized slice (optimized.json)")->required();
  report->add_option("--format", format, "json or table")->check(CLI::IsMember({"json", "table"}));

  std::string addr = env_or("GBPA_ADDR", "127.0.0.1:8080");
  std::string store = env_or("GBPA_STORE", "gbpa-store");
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--addr", addr, "host:port ($GBPA_ADDR)");
  serve->add_option("--store", store, "Run store directory ($GBPA_STORE)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) {
      const auto result = gbpa::run_scenario(scenario, seed, data_dir);
      const auto written = gbpa::write_outputs(result, out_dir);
      if (!quiet) {
        std::cout << gbpa::render_table(gbpa::compare(gbpa::slice_to_json(result, false),
                                                      gbpa::slice_to_json(result, true)));
        for (const auto& p : written) std::cout << "wrote " << p.string() << "\n";
      }
    } else if (fixtures->parsed()) {
      for (const auto& p : gbpa::generate_fixtures(scenario, seed, data_dir)) std::cout << "wrote " << p.string() << "\n";
    } else if (report->parsed()) {
      const auto table = gbpa::compare(read_slice(before_path), read_slice(after_path));
      if (format == "json") std::cout << gbpa::table_to_json(table).dump(2) << "\n";
      else std::cout << gbpa::render_table(table);
    } else if (serve->parsed()) {
      gbpa::ServiceConfig config = gbpa::ServiceConfig::from_env();
      config.data_dir = data_dir;
      config.store_dir = store;
      gbpa::Service service(config);
      return gbpa::serve_forever(service, addr);
    }
  } catch (const gbpa::Error& e) {
    std::cerr << "gbpa: " << e.what() << "\n";
    return is_asset_error(e.code()) ? kAssetError : kScenarioFailure;
  } catch (const std::exception& e) {
    std::cerr << "gbpa: " << e.what() << "\n";
    return kScenarioFailure;
  }
  return 0;
}
