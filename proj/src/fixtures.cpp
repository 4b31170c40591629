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

// Synthetic fixture generation for the bundled scenarios. Draws use the raw
// mt19937_64 output so the bytes do not depend on the standard library's
// distribution implementations.

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <random>

#include "gbpa/error.hpp"
#include "gbpa/sim_harness.hpp"

namespace gbpa {

namespace fs = std::filesystem;

namespace {

class Draw {
 public:
  explicit Draw(std::uint64_t seed) : rng_(seed) {}
  std::uint64_t below(std::uint64_t n) { return rng_() % n; }
  std::int64_t between(std::int64_t lo, std::int64_t hi) { return lo + static_cast<std::int64_t>(below(hi - lo + 1)); }
  bool percent(int p) { return below(100) < static_cast<std::uint64_t>(p); }
  template <typename T>
  const T& pick(const std::vector<T>& xs) { return xs[below(xs.size())]; }
  template <typename T>
  void shuffle(std::vector<T>& xs) {
    for (std::size_t i = xs.size(); i > 1; --i) std::swap(xs[i - 1], xs[below(i)]);
  }

 private:
  std::mt19937_64 rng_;
};

std::string fmt(const char* pattern, long long v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

std::string cents(std::int64_t c) { return std::to_string(c / 100) + "." + fmt("%02lld", c % 100); }

// n values whose mean is exactly `mean`: symmetric pairs plus the mean itself.
std::vector<std::int64_t> durations_with_mean(Draw& d, std::size_t n, std::int64_t mean, std::int64_t step, int spread) {
  std::vector<std::int64_t> out;
  while (out.size() + 1 < n) {
    const std::int64_t off = d.between(0, spread) * step;
    out.push_back(mean + off);
    out.push_back(mean - off);
  }
  if (out.size() < n) out.push_back(mean);
  d.shuffle(out);
  return out;
}

class Csv {
 public:
  Csv(const fs::path& path, std::vector<std::string> header) : out_(path, std::ios::binary), width_(header.size()) {
    if (!out_) throw Error(Errc::Io, path.string());
    row(header);
  }
  void row(const std::vector<std::string>& cells) {
    if (cells.size() != width_) throw Error(Errc::InvalidSpec, "csv", "row width");
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << "\n";
  }

 private:
  std::ofstream out_;
  std::size_t width_;
};

std::string ts_string(std::int64_t ms) { return format_rfc3339(Timestamp{ms}); }

std::vector<fs::path> wire_fixtures(std::uint64_t seed, const fs::path& dir) {
  Draw d(seed);
  const fs::path path = dir / "transactions.csv";
  Csv csv(path, {"txn_id", "customer", "role", "account", "counterparty", "purpose", "ts", "amount", "ccy", "channel",
                 "status", "duration_ms"});
  struct Customer {
    std::string id, role, account;
  };
  std::vector<Customer> customers;
  for (int i = 1; i <= 150; ++i) {
    customers.push_back({fmt("CUST-%04lld", i), i % 10 == 0 ? "corporate" : "customer", fmt("ACC-%05lld", 10000 + i)});
  }
  const std::vector<std::string> purposes{"payment", "invoice", "salary", "rent", "supplier", "tax", "family"};
  const std::vector<std::string> channels{"mobile_app", "web", "branch", "api"};
  const std::size_t n = 607;
  const auto durations = durations_with_mean(d, n, 900000, 60000, 8);
  std::int64_t t = parse_rfc3339("2024-01-02T08:00:00Z")->ms;
  for (std::size_t i = 0; i < n; ++i) {
    const Customer& c = d.pick(customers);
    t += 600000 + static_cast<std::int64_t>(d.below(6 * 3600) * 1000);
    std::int64_t amount = 0;
    if (c.role == "corporate") amount = d.between(500000, 20000000);
    else if (d.percent(3)) amount = d.between(1000001, 2500000);
    else amount = d.between(2000, 950000);
    std::string counterparty;
    const auto r = d.below(100);
    if (r < 1) counterparty = fmt("EXT-SANC-%02lld", d.between(1, 3));
    else if (r < 2) counterparty = fmt("EXT-WATCH-%02lld", d.between(1, 2));
    else if (r < 60) counterparty = d.pick(customers).account;
    else counterparty = fmt("EXT-%05lld", d.between(1, 99999));
    csv.row({fmt("TXN-%06lld", static_cast<long long>(i + 1)), c.id, c.role, c.account, counterparty, d.pick(purposes),
             ts_string(t), cents(amount), d.percent(70) ? "USD" : "EUR", d.pick(channels),
             d.percent(3) ? "failure" : "success", std::to_string(durations[i])});
  }
  return {path};
}

struct Claim {
  std::string id, employee, ts;
  std::int64_t amount = 0, invoice = 0, budget = 0;
  std::string receipt, tax_id, vendor, category, channel;
};

const std::vector<std::string> kCategories{"travel", "meals", "lodging", "training", "supplies"};
const std::vector<std::string> kClaimChannels{"portal", "email", "mobile_app"};

Claim clean_claim(Draw& d, std::string id, std::string receipt, std::int64_t t) {
  Claim c;
  c.id = std::move(id);
  c.employee = fmt("E-%04lld", d.between(1, 80));
  c.ts = ts_string(t);
  c.amount = d.between(2000, 480000);
  c.invoice = c.amount;
  c.budget = (c.amount + d.between(0, 200000) + 9999) / 10000 * 10000;
  c.receipt = std::move(receipt);
  c.tax_id = fmt("%02lld-", d.between(10, 99)) + fmt("%07lld", d.between(0, 9999999));
  c.vendor = fmt("VND-%04lld", d.between(1, 300));
  c.category = d.pick(kCategories);
  c.channel = d.pick(kClaimChannels);
  return c;
}

std::vector<std::string> claim_cells(const Claim& c, std::int64_t duration) {
  return {c.id,     c.employee, c.ts,          cents(c.amount), "USD",     cents(c.invoice), cents(c.budget),
          c.receipt, c.tax_id,  c.vendor,      c.category,      c.channel, "success",        std::to_string(duration)};
}

const std::vector<std::string> kClaimHeader{"claim_id", "employee", "ts",     "amount",   "ccy",    "invoice_amount",
                                            "budget",   "receipt",  "tax_id", "vendor",   "category", "channel",
                                            "status",   "duration_ms"};

std::vector<fs::path> reimbursement_fixtures(std::uint64_t seed, const fs::path& dir) {
  Draw d(seed);
  std::vector<fs::path> written;
  const std::int64_t start = parse_rfc3339("2024-01-02T09:00:00Z")->ms;
  {
    const fs::path path = dir / "claims.csv";
    Csv csv(path, kClaimHeader);
    const std::size_t n = 250;
    const auto durations = durations_with_mean(d, n, 85500000, 900000, 20);
    std::int64_t t = start;
    for (std::size_t i = 0; i < n; ++i) {
      t += 3600000 + static_cast<std::int64_t>(d.below(30 * 3600) * 1000);
      const Claim c = clean_claim(d, fmt("CLM-%05lld", static_cast<long long>(i + 1)),
                                  fmt("R-H%05lld", static_cast<long long>(i + 1)), t);
      csv.row(claim_cells(c, durations[i]));
    }
    written.push_back(path);
  }

  std::vector<std::string> paid;
  {
    const fs::path path = dir.parent_path().parent_path() / "lists" / "paid_receipts.txt";
    std::ofstream out(path, std::ios::binary);
    out << "# receipts already reimbursed\n";
    for (int i = 1; i <= 400; ++i) {
      paid.push_back(fmt("R-P%05lld", i));
      out << paid.back() << "\n";
    }
    written.push_back(path);
  }

  {
    const fs::path path = dir / "defects.csv";
    auto header = kClaimHeader;
    header.push_back("defect");
    Csv csv(path, header);
    const std::vector<std::pair<std::string, int>> classes{{"malformed_tax_id", 40}, {"amount_mismatch", 30},
                                                           {"over_budget", 24},      {"duplicate_receipt", 16},
                                                           {"blacklisted_vendor", 8}, {"miscoded_category", 8}};
    std::vector<std::string> labels;
    for (const auto& [name, count] : classes) labels.insert(labels.end(), count, name);
    labels.resize(1000, "none");
    d.shuffle(labels);
    const std::vector<std::string> bad_tax{"123-45678", "12-345678", "AB-1234567", "12-34567890", "1234567890"};
    std::int64_t t = start;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      t += 1800000 + static_cast<std::int64_t>(d.below(4 * 3600) * 1000);
      Claim c = clean_claim(d, fmt("C-%05lld", static_cast<long long>(i + 1)),
                            fmt("R-N%05lld", static_cast<long long>(i + 1)), t);
      const std::string& defect = labels[i];
      if (defect == "malformed_tax_id") {
        c.tax_id = d.pick(bad_tax);
      } else if (defect == "amount_mismatch") {
        c.invoice = c.amount - d.between(100, std::min<std::int64_t>(25000, c.amount - 1));
      } else if (defect == "over_budget") {
        c.amount = d.between(30000, 480000);
        c.invoice = c.amount;
        c.budget = (c.amount - 1) / 10000 * 10000 - 10000 * d.between(0, 2);
        if (c.budget < 10000) c.budget = 10000;
      } else if (defect == "duplicate_receipt") {
        c.receipt = d.pick(paid);
      } else if (defect == "blacklisted_vendor") {
        c.vendor = fmt("VND-SHELL-%02lld", d.between(1, 4));
      } else if (defect == "miscoded_category") {
        // a valid category, just the wrong one for the expense
        c.category = kCategories[(std::find(kCategories.begin(), kCategories.end(), c.category) - kCategories.begin() +
                                  1 + d.below(kCategories.size() - 1)) %
                                 kCategories.size()];
      }
      auto cells = claim_cells(c, 85500000);
      cells.push_back(defect);
      csv.row(cells);
    }
    written.push_back(path);
  }
  return written;
}

}  // namespace

std::vector<fs::path> generate_fixtures(const std::string& name, std::uint64_t seed, const fs::path& data_dir) {
  const fs::path dir = data_dir / "scenarios" / name;
  if (!fs::is_directory(dir)) throw Error(Errc::ScenarioAssetsMissing, name, "no scenario directory " + dir.string());
  if (name == "wire_transfer") return wire_fixtures(seed, dir);
  if (name == "reimbursement") return reimbursement_fixtures(seed, dir);
  throw Error(Errc::ScenarioAssetsMissing, name, "no fixture generator");
}

}  // namespace gbpa
