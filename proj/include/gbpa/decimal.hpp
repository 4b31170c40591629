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

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace gbpa {

/// Exact decimal held as a scaled integer: value = mantissa / 10^scale.
/// Always canonical (no trailing fractional zeros), so equality is structural.
class Decimal {
 public:
  static constexpr int kMaxScale = 9;

  constexpr Decimal() = default;
  static Decimal from_int(std::int64_t v) { return Decimal(v, 0); }
  static Decimal from_scaled(std::int64_t mantissa, int scale);

  /// Accepts [+-]digits[.digits]; rejects exponents, NaN/inf and more than
  /// kMaxScale fractional digits.
  static std::optional<Decimal> parse(std::string_view text);

  std::int64_t mantissa() const noexcept { return mantissa_; }
  int scale() const noexcept { return scale_; }

  std::string to_string() const;
  double to_double() const noexcept;

  Decimal operator+(const Decimal& other) const;
  Decimal operator-(const Decimal& other) const;

  friend bool operator==(const Decimal&, const Decimal&) = default;
  friend std::strong_ordering operator<=>(const Decimal& a, const Decimal& b);

 private:
  constexpr Decimal(std::int64_t m, int s) : mantissa_(m), scale_(s) {}
  void canonicalize();

  std::int64_t mantissa_ = 0;
  int scale_ = 0;
};

}  // namespace gbpa
