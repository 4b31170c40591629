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

#include "gbpa/decimal.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace gbpa {

namespace {

constexpr std::int64_t kPow10[] = {1,         10,         100,         1000,         10000,
                                   100000,    1000000,    10000000,    100000000,    1000000000,
                                   10000000000, 100000000000, 1000000000000, 10000000000000,
                                   100000000000000, 1000000000000000, 10000000000000000,
                                   100000000000000000, 1000000000000000000};

std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  std::int64_t out = 0;
  if (__builtin_mul_overflow(a, b, &out)) throw std::overflow_error("decimal overflow");
  return out;
}

std::int64_t checked_add(std::int64_t a, std::int64_t b) {
  std::int64_t out = 0;
  if (__builtin_add_overflow(a, b, &out)) throw std::overflow_error("decimal overflow");
  return out;
}

}  // namespace

Decimal Decimal::from_scaled(std::int64_t mantissa, int scale) {
  if (scale < 0 || scale > kMaxScale) throw std::invalid_argument("decimal scale out of range");
  Decimal d(mantissa, scale);
  d.canonicalize();
  return d;
}

void Decimal::canonicalize() {
  while (scale_ > 0 && mantissa_ % 10 == 0) {
    mantissa_ /= 10;
    --scale_;
  }
  if (mantissa_ == 0) scale_ = 0;
}

std::optional<Decimal> Decimal::parse(std::string_view text) {
  if (text.empty()) return std::nullopt;
  std::size_t i = 0;
  bool negative = false;
  if (text[0] == '+' || text[0] == '-') {
    negative = text[0] == '-';
    i = 1;
  }
  std::int64_t mantissa = 0;
  int scale = 0;
  bool digits = false;
  bool dot = false;
  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '.') {
      if (dot) return std::nullopt;
      dot = true;
      continue;
    }
    if (c < '0' || c > '9') return std::nullopt;
    digits = true;
    if (dot) {
      if (++scale > kMaxScale) return std::nullopt;
    }
    if (mantissa > (std::numeric_limits<std::int64_t>::max() - 9) / 10) return std::nullopt;
    mantissa = mantissa * 10 + (c - '0');
  }
  if (!digits) return std::nullopt;
  Decimal d(negative ? -mantissa : mantissa, scale);
  d.canonicalize();
  return d;
}

std::string Decimal::to_string() const {
  const bool negative = mantissa_ < 0;
  const auto raw = static_cast<unsigned long long>(mantissa_);
  std::string digits = std::to_string(negative ? 0ULL - raw : raw);
  if (scale_ > 0) {
    if (static_cast<int>(digits.size()) <= scale_) {
      digits.insert(0, static_cast<std::size_t>(scale_ - static_cast<int>(digits.size()) + 1), '0');
    }
    digits.insert(digits.size() - static_cast<std::size_t>(scale_), 1, '.');
  }
  return negative ? "-" + digits : digits;
}

double Decimal::to_double() const noexcept {
  return static_cast<double>(mantissa_) / static_cast<double>(kPow10[scale_]);
}

Decimal Decimal::operator+(const Decimal& other) const {
  const int scale = std::max(scale_, other.scale_);
  const std::int64_t a = checked_mul(mantissa_, kPow10[scale - scale_]);
  const std::int64_t b = checked_mul(other.mantissa_, kPow10[scale - other.scale_]);
  Decimal d(checked_add(a, b), scale);
  d.canonicalize();
  return d;
}

Decimal Decimal::operator-(const Decimal& other) const {
  return *this + Decimal(checked_mul(other.mantissa_, -1), other.scale_);
}

std::strong_ordering operator<=>(const Decimal& a, const Decimal& b) {
  const int scale = std::max(a.scale_, b.scale_);
  const __int128 x = static_cast<__int128>(a.mantissa_) * kPow10[scale - a.scale_];
  const __int128 y = static_cast<__int128>(b.mantissa_) * kPow10[scale - b.scale_];
  if (x < y) return std::strong_ordering::less;
  if (x > y) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

}  // namespace gbpa
