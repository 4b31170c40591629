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

#include "gbpa/event_model.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <exception>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include "gbpa/error.hpp"

namespace gbpa {

namespace {

// Howard Hinnant's days_from_civil.
constexpr std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) noexcept {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m > 2 ? m - 3 : m + 9) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

struct Civil {
  std::int64_t y;
  unsigned m, d;
};

constexpr Civil civil_from_days(std::int64_t z) noexcept {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const auto doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp < 10 ? mp + 3 : mp - 9;
  return {y + (m <= 2), m, d};
}

bool is_leap(std::int64_t y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

unsigned days_in_month(std::int64_t y, unsigned m) {
  static constexpr unsigned kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  return m == 2 && is_leap(y) ? 29 : kDays[m - 1];
}

bool read_digits(std::string_view s, std::size_t pos, std::size_t count, int& out) {
  if (pos + count > s.size()) return false;
  out = 0;
  for (std::size_t i = pos; i < pos + count; ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    out = out * 10 + (s[i] - '0');
  }
  return true;
}

const std::regex& monetary_unit_pattern() {
  static const std::regex re("^[A-Z]{3}$");
  return re;
}

const std::set<std::string, std::less<>>& reserved_words() {
  static const std::set<std::string, std::less<>> words{"performed", "via", "updating", "in",
                                                        "result:", "yielding"};
  return words;
}

// Bare when the value is a single plain token, JSON-quoted otherwise, so facet
// boundaries survive concatenation.
std::string token(std::string_view value) {
  static const std::regex bare("^[A-Za-z0-9][A-Za-z0-9._:/@+-]*$");
  const std::string v(value);
  if (std::regex_match(v, bare) && !reserved_words().contains(value)) return v;
  return Json(v).dump();
}

std::string render_quantity(const Quantity& q) {
  return q.magnitude.to_string() + " " + token(q.unit);
}

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

Quantity make_quantity(std::string_view magnitude, std::string unit, bool monetary) {
  auto value = Decimal::parse(magnitude);
  if (!value) throw Error(Errc::BadQuantity, std::string(magnitude), "not a finite decimal");
  if (monetary && !std::regex_match(unit, monetary_unit_pattern())) {
    throw Error(Errc::BadUnit, unit, "monetary unit must match ^[A-Z]{3}$");
  }
  return Quantity{*value, std::move(unit)};
}

std::int64_t parse_how_long(std::string_view text) {
  if (lowercase(text) == "real-time" || lowercase(text) == "realtime") return 0;
  std::int64_t ms = 0;
  if (text.empty()) throw Error(Errc::BadDuration, std::string(text));
  for (const char c : text) {
    if (!std::isdigit(static_cast<unsigned char>(c))) {
      throw Error(Errc::BadDuration, std::string(text), "expected non-negative milliseconds");
    }
    ms = ms * 10 + (c - '0');
  }
  return ms;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cell += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else if (c != '\r') {
      cell += c;
    }
  }
  cells.push_back(std::move(cell));
  return cells;
}

std::string scalar_text(const Json& v) {
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

}  // namespace

std::optional<Timestamp> parse_rfc3339(std::string_view s) {
  int year = 0, month = 0, day = 0, hour = 0, minute = 0, second = 0;
  if (s.size() < 20) return std::nullopt;
  if (!read_digits(s, 0, 4, year) || s[4] != '-' || !read_digits(s, 5, 2, month) || s[7] != '-' ||
      !read_digits(s, 8, 2, day) || (s[10] != 'T' && s[10] != 't') || !read_digits(s, 11, 2, hour) ||
      s[13] != ':' || !read_digits(s, 14, 2, minute) || s[16] != ':' ||
      !read_digits(s, 17, 2, second)) {
    return std::nullopt;
  }
  if (month < 1 || month > 12 || day < 1 ||
      static_cast<unsigned>(day) > days_in_month(year, static_cast<unsigned>(month)) || hour > 23 ||
      minute > 59 || second > 59) {
    return std::nullopt;
  }
  std::size_t pos = 19;
  std::int64_t millis = 0;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    std::size_t digits = 0;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
      if (digits < 3) millis = millis * 10 + (s[pos] - '0');
      ++digits;
      ++pos;
    }
    if (digits == 0 || digits > 9) return std::nullopt;
    for (std::size_t k = digits; k < 3; ++k) millis *= 10;
  }
  if (pos >= s.size()) return std::nullopt;
  std::int64_t offset_min = 0;
  if (s[pos] == 'Z' || s[pos] == 'z') {
    ++pos;
  } else if (s[pos] == '+' || s[pos] == '-') {
    int oh = 0, om = 0;
    if (!read_digits(s, pos + 1, 2, oh) || pos + 3 >= s.size() || s[pos + 3] != ':' ||
        !read_digits(s, pos + 4, 2, om) || oh > 23 || om > 59) {
      return std::nullopt;
    }
    offset_min = (oh * 60 + om) * (s[pos] == '-' ? -1 : 1);
    pos += 6;
  } else {
    return std::nullopt;
  }
  if (pos != s.size()) return std::nullopt;
  const std::int64_t days = days_from_civil(year, static_cast<unsigned>(month), static_cast<unsigned>(day));
  const std::int64_t secs = days * 86400 + hour * 3600 + minute * 60 + second - offset_min * 60;
  return Timestamp{secs * 1000 + millis};
}

std::string format_rfc3339(Timestamp ts) {
  std::int64_t ms = ts.ms % 1000;
  std::int64_t secs = ts.ms / 1000;
  if (ms < 0) {
    ms += 1000;
    --secs;
  }
  std::int64_t days = secs / 86400;
  std::int64_t rem = secs % 86400;
  if (rem < 0) {
    rem += 86400;
    --days;
  }
  const Civil c = civil_from_days(days);
  char buf[40];
  std::snprintf(buf, sizeof buf, "%04lld-%02u-%02uT%02lld:%02lld:%02lld.%03lldZ",
                static_cast<long long>(c.y), c.m, c.d, static_cast<long long>(rem / 3600),
                static_cast<long long>(rem / 60 % 60), static_cast<long long>(rem % 60),
                static_cast<long long>(ms));
  return buf;
}

std::string_view to_string(ResultStatus s) noexcept {
  switch (s) {
    case ResultStatus::success: return "success";
    case ResultStatus::failure: return "failure";
    case ResultStatus::pending: return "pending";
  }
  return "pending";
}

std::optional<ResultStatus> parse_result_status(std::string_view s) noexcept {
  if (s == "success") return ResultStatus::success;
  if (s == "failure") return ResultStatus::failure;
  if (s == "pending") return ResultStatus::pending;
  return std::nullopt;
}

FieldMapping FieldMapping::from_json(const Json& doc) {
  FieldMapping mapping;
  for (const auto& [facet, source] : doc.items()) {
    if (facet == "monetary") {
      mapping.monetary = source.get<bool>();
      continue;
    }
    if (source.is_string()) {
      mapping.facets[facet] = FacetSource{source.get<std::string>(), std::nullopt};
    } else if (source.is_object() && source.contains("const")) {
      mapping.facets[facet] = FacetSource{{}, scalar_text(source.at("const"))};
    } else {
      throw Error(Errc::InvalidSpec, facet, "mapping entry must be a key or {\"const\": value}");
    }
  }
  return mapping;
}

Json FieldMapping::to_json() const {
  Json doc = Json::object();
  for (const auto& [facet, source] : facets) {
    if (source.constant) {
      doc[facet] = Json{{"const", *source.constant}};
    } else {
      doc[facet] = source.key;
    }
  }
  if (!monetary) doc["monetary"] = false;
  return doc;
}

Event5W3H1R parse_event_record(const RawRecord& raw, const FieldMapping& mapping) {
  std::set<std::string> consumed;
  auto lookup = [&](const std::string& facet) -> std::optional<std::string> {
    const auto it = mapping.facets.find(facet);
    if (it == mapping.facets.end()) return std::nullopt;
    if (it->second.constant) return it->second.constant;
    consumed.insert(it->second.key);
    const auto value = raw.find(it->second.key);
    if (value == raw.end() || value->second.empty()) return std::nullopt;
    return value->second;
  };
  auto required = [&](const std::string& facet) {
    auto v = lookup(facet);
    if (!v) throw Error(Errc::MissingField, facet);
    return *v;
  };

  Event5W3H1R ev;
  ev.who.id = required("who");
  ev.who.role = lookup("who_role").value_or("");
  ev.what = required("what");
  ev.why = required("why");
  const std::string when_text = required("when");
  const auto when = parse_rfc3339(when_text);
  if (!when) throw Error(Errc::BadTimestamp, when_text, "expected RFC 3339");
  ev.when = *when;
  ev.where = lookup("where").value_or("");
  ev.how = required("how");

  if (auto amount = lookup("how_much")) {
    ev.how_much = make_quantity(*amount, lookup("how_much_unit").value_or(""), mapping.monetary);
  }
  if (auto duration = lookup("how_long")) ev.how_long_ms = parse_how_long(*duration);

  if (mapping.facets.contains("result")) {
    const std::string status = required("result");
    const auto parsed = parse_result_status(lowercase(status));
    if (!parsed) throw Error(Errc::BadStatus, status);
    ev.result.status = *parsed;
  }
  if (auto value = lookup("result_value")) {
    ev.result.value = make_quantity(*value, lookup("result_unit").value_or(""), mapping.monetary);
  }

  for (const auto& [key, value] : raw) {
    if (!consumed.contains(key)) ev.attributes.emplace(key, value);
  }
  return ev;
}

std::string render_narrative(const Event5W3H1R& ev) {
  std::string s;
  if (!ev.who.role.empty()) s += token(ev.who.role) + " ";
  s += token(ev.who.id) + " performed " + token(ev.why) + " via " + token(ev.how) + ", updating " +
       token(ev.what);
  if (ev.how_long_ms) {
    s += *ev.how_long_ms == 0 ? ", in real-time" : ", in " + std::to_string(*ev.how_long_ms) + " ms";
  }
  s += ", result: ";
  s += to_string(ev.result.status);
  if (ev.how_much) s += " " + render_quantity(*ev.how_much);
  if (ev.result.value) s += " yielding " + render_quantity(*ev.result.value);
  return s;
}

Json event_to_json(const Event5W3H1R& ev) {
  auto quantity = [](const std::optional<Quantity>& q) -> Json {
    if (!q) return nullptr;
    return Json{{"magnitude", q->magnitude.to_string()}, {"unit", q->unit}};
  };
  Json doc{{"who", {{"id", ev.who.id}, {"role", ev.who.role}}},
           {"what", ev.what},
           {"why", ev.why},
           {"when", format_rfc3339(ev.when)},
           {"where", ev.where},
           {"how", ev.how},
           {"how_much", quantity(ev.how_much)},
           {"how_long", ev.how_long_ms ? Json(*ev.how_long_ms) : Json(nullptr)},
           {"result", {{"status", to_string(ev.result.status)}, {"value", quantity(ev.result.value)}}}};
  if (!ev.attributes.empty()) doc["attributes"] = ev.attributes;
  return doc;
}

Event5W3H1R event_from_json(const Json& doc) {
  auto text = [&](const Json& obj, const char* key, const char* facet) {
    if (!obj.contains(key) || !obj.at(key).is_string()) throw Error(Errc::MissingField, facet);
    return obj.at(key).get<std::string>();
  };
  auto quantity = [](const Json& q, bool monetary) -> std::optional<Quantity> {
    if (q.is_null()) return std::nullopt;
    return make_quantity(q.at("magnitude").get<std::string>(), q.at("unit").get<std::string>(), monetary);
  };
  Event5W3H1R ev;
  if (!doc.contains("who")) throw Error(Errc::MissingField, "who");
  ev.who.id = text(doc.at("who"), "id", "who");
  ev.who.role = doc.at("who").value("role", "");
  ev.what = text(doc, "what", "what");
  ev.why = text(doc, "why", "why");
  const std::string when_text = text(doc, "when", "when");
  const auto when = parse_rfc3339(when_text);
  if (!when) throw Error(Errc::BadTimestamp, when_text);
  ev.when = *when;
  ev.where = doc.value("where", "");
  ev.how = text(doc, "how", "how");
  if (ev.who.id.empty() || ev.what.empty() || ev.why.empty() || ev.how.empty()) {
    throw Error(Errc::MissingField, "mandatory facet empty");
  }
  ev.how_much = quantity(doc.value("how_much", Json(nullptr)), true);
  if (const auto& hl = doc.value("how_long", Json(nullptr)); !hl.is_null()) {
    const auto ms = hl.get<std::int64_t>();
    if (ms < 0) throw Error(Errc::BadDuration, std::to_string(ms));
    ev.how_long_ms = ms;
  }
  const Json& result = doc.at("result");
  const auto status = parse_result_status(result.at("status").get<std::string>());
  if (!status) throw Error(Errc::BadStatus, result.at("status").dump());
  ev.result.status = *status;
  ev.result.value = quantity(result.value("value", Json(nullptr)), true);
  if (doc.contains("attributes")) {
    ev.attributes = doc.at("attributes").get<std::map<std::string, std::string>>();
  }
  return ev;
}

std::vector<RawRecord> read_raw_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, path.string(), "cannot open");
  std::vector<RawRecord> rows;
  std::string line;
  bool first = true;
  bool jsonl = false;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    const auto start = line.find_first_not_of(" \t\r");
    if (start == std::string::npos) continue;
    if (first) {
      first = false;
      jsonl = line[start] == '{';
      if (!jsonl) {
        header = split_csv_line(line);
        continue;
      }
    }
    RawRecord row;
    if (jsonl) {
      const Json obj = Json::parse(line);
      for (const auto& [key, value] : obj.items()) {
        if (!value.is_null()) row.emplace(key, scalar_text(value));
      }
    } else {
      const auto cells = split_csv_line(line);
      for (std::size_t i = 0; i < header.size() && i < cells.size(); ++i) row.emplace(header[i], cells[i]);
    }
    rows.push_back(std::move(row));
  }
  if (in.bad()) throw Error(Errc::Io, path.string(), "read failed");
  return rows;
}

namespace {

[[noreturn]] void rethrow_with_row(std::size_t row, const std::exception_ptr& err) {
  try {
    std::rethrow_exception(err);
  } catch (const Error& e) {
    throw Error(e.code(), e.subject(), "row " + std::to_string(row + 1) + ": " + e.what());
  }
}

}  // namespace

std::vector<Event5W3H1R> parse_records_serial(std::span<const RawRecord> rows, const FieldMapping& mapping) {
  std::vector<Event5W3H1R> out;
  out.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    try {
      out.push_back(parse_event_record(rows[i], mapping));
    } catch (const Error&) {
      rethrow_with_row(i, std::current_exception());
    }
  }
  return out;
}

std::vector<Event5W3H1R> parse_records(std::span<const RawRecord> rows, const FieldMapping& mapping) {
  const auto n = static_cast<std::ptrdiff_t>(rows.size());
  std::vector<Event5W3H1R> out(rows.size());
  std::vector<std::exception_ptr> errors(rows.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = parse_event_record(rows[static_cast<std::size_t>(i)], mapping);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (errors[i]) rethrow_with_row(i, errors[i]);
  }
  return out;
}

EventLog load_event_log(const std::filesystem::path& path, const FieldMapping& mapping) {
  const auto rows = read_raw_records(path);
  EventLog log;
  log.source = path.string();
  log.events = parse_records(rows, mapping);
  std::stable_sort(log.events.begin(), log.events.end(),
                   [](const Event5W3H1R& a, const Event5W3H1R& b) { return a.when < b.when; });
  return log;
}

}  // namespace gbpa
