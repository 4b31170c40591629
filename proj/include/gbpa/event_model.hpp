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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gbpa/decimal.hpp"
#include "json.hpp"

namespace gbpa {

using Json = nlohmann::json;

/// Milliseconds since the Unix epoch, UTC.
struct Timestamp {
  std::int64_t ms = 0;
  friend auto operator<=>(const Timestamp&, const Timestamp&) = default;
};

/// RFC 3339 only: YYYY-MM-DDTHH:MM:SS[.frac](Z|+hh:mm|-hh:mm).
std::optional<Timestamp> parse_rfc3339(std::string_view text);
/// Canonical form, always UTC with millisecond precision.
std::string format_rfc3339(Timestamp ts);

struct Actor {
  std::string id;
  std::string role;
  friend bool operator==(const Actor&, const Actor&) = default;
};

struct Quantity {
  Decimal magnitude;
  std::string unit;
  friend bool operator==(const Quantity&, const Quantity&) = default;
};

enum class ResultStatus { success, failure, pending };

std::string_view to_string(ResultStatus s) noexcept;
std::optional<ResultStatus> parse_result_status(std::string_view s) noexcept;

struct EventResult {
  ResultStatus status = ResultStatus::pending;
  std::optional<Quantity> value;
  friend bool operator==(const EventResult&, const EventResult&) = default;
};

/// One enterprise action as a nine-facet decision event.
struct Event5W3H1R {
  Actor who;
  std::string what;
  std::string why;
  Timestamp when;
  std::string where;
  std::string how;
  std::optional<Quantity> how_much;
  std::optional<std::int64_t> how_long_ms;
  EventResult result;
  /// Source columns not consumed by the mapping; kept for audit fidelity.
  std::map<std::string, std::string> attributes;

  friend bool operator==(const Event5W3H1R&, const Event5W3H1R&) = default;
};

struct EventLog {
  std::vector<Event5W3H1R> events;
  std::string source;
  std::string schema_version = "5w3h1r/1";
};

/// A raw input row: column name -> textual value.
using RawRecord = std::map<std::string, std::string>;

/// Per-facet source: a record key, or a constant.
struct FacetSource {
  std::string key;
  std::optional<std::string> constant;
};

/// Facet keys: who, who_role, what, why, when, where, how, how_much,
/// how_much_unit, how_long, result, result_value, result_unit.
struct FieldMapping {
  std::map<std::string, FacetSource> facets;
  /// When true (default) how_much units must be ISO-4217 style codes.
  bool monetary = true;

  static FieldMapping from_json(const Json& doc);
  Json to_json() const;
};

Event5W3H1R parse_event_record(const RawRecord& raw, const FieldMapping& mapping);

/// Deterministic single-sentence rendering, facets in the order
/// who, why, how, what, how long, how much, result.
std::string render_narrative(const Event5W3H1R& event);

Json event_to_json(const Event5W3H1R& event);
Event5W3H1R event_from_json(const Json& doc);

/// Reads CSV (header row) or JSONL into raw records; format chosen by the
/// first non-blank character.
std::vector<RawRecord> read_raw_records(const std::filesystem::path& path);

/// Parses every record; on failure reports the lowest failing row (1-based).
/// OpenMP-parallel; `parse_records_serial` is the reference implementation.
std::vector<Event5W3H1R> parse_records(std::span<const RawRecord> rows, const FieldMapping& mapping);
std::vector<Event5W3H1R> parse_records_serial(std::span<const RawRecord> rows,
                                              const FieldMapping& mapping);

/// Stable-sorted by `when`.
EventLog load_event_log(const std::filesystem::path& path, const FieldMapping& mapping);

}  // namespace gbpa
