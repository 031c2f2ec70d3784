#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace stagehpo {

// Exact base-10 number: value = mantissa * 10^-scale, scale >= 0, kept in
// normalized form (no trailing zero digits in the fraction). Hyperparameter
// values go through this type so prefix merging sees exact equality.
class Decimal {
 public:
  Decimal() = default;
  static Decimal from_int(std::int64_t value) { return Decimal(value, 0); }

  // Accepts [+-]digits[.digits][(e|E)[+-]digits]. Throws Error(kInvalidValue).
  static Decimal parse(std::string_view text);

  std::string to_string() const;
  double to_double() const;

  bool is_integer() const { return scale_ == 0; }
  bool is_zero() const { return mantissa_ == 0; }
  bool is_negative() const { return mantissa_ < 0; }
  std::int64_t mantissa() const { return mantissa_; }
  int scale() const { return scale_; }

  // Throws Error(kInvalidValue) on int64 overflow.
  Decimal operator*(const Decimal& other) const;

  friend bool operator==(const Decimal&, const Decimal&) = default;
  friend std::strong_ordering operator<=>(const Decimal& a, const Decimal& b);

 private:
  Decimal(std::int64_t mantissa, int scale);
  static Decimal normalized(__int128 mantissa, int scale);

  std::int64_t mantissa_ = 0;
  int scale_ = 0;
};

}  // namespace stagehpo
