#include "stagehpo/decimal.hpp"

#include <cctype>
#include <cstdlib>
#include <algorithm>
#include <limits>

#include "stagehpo/error.hpp"

namespace stagehpo {

namespace {

constexpr int kMaxScale = 36;

bool fits_int64(__int128 v) {
  return v >= std::numeric_limits<std::int64_t>::min() &&
         v <= std::numeric_limits<std::int64_t>::max();
}

__int128 pow10(int n) {
  __int128 r = 1;
  for (int i = 0; i < n; ++i) r *= 10;
  return r;
}

}  // namespace

Decimal::Decimal(std::int64_t mantissa, int scale) : mantissa_(mantissa), scale_(scale) {}

Decimal Decimal::normalized(__int128 mantissa, int scale) {
  while (scale > 0 && mantissa % 10 == 0) {
    mantissa /= 10;
    --scale;
  }
  if (mantissa == 0) scale = 0;
  if (!fits_int64(mantissa) || scale > kMaxScale) {
    throw Error(ErrorCode::kInvalidValue, "decimal value out of representable range");
  }
  return Decimal(static_cast<std::int64_t>(mantissa), scale);
}

Decimal Decimal::parse(std::string_view text) {
  auto fail = [&] {
    throw Error(ErrorCode::kInvalidValue, "not a decimal number: '" + std::string(text) + "'");
  };
  std::size_t i = 0;
  bool negative = false;
  if (i < text.size() && (text[i] == '+' || text[i] == '-')) {
    negative = text[i] == '-';
    ++i;
  }
  __int128 mantissa = 0;
  int scale = 0;
  int digits = 0;
  bool in_fraction = false;
  for (; i < text.size(); ++i) {
    char c = text[i];
    if (c == '.') {
      if (in_fraction) fail();
      in_fraction = true;
      continue;
    }
    if (!std::isdigit(static_cast<unsigned char>(c))) break;
    // Leading zeros never count toward precision.
    if (mantissa != 0 || c != '0') ++digits;
    if (digits > 36) fail();
    mantissa = mantissa * 10 + (c - '0');
    if (in_fraction) ++scale;
  }
  bool any_digit = false;
  for (char c : text.substr(0, i)) any_digit |= static_cast<bool>(std::isdigit(static_cast<unsigned char>(c)));
  if (!any_digit) fail();

  if (i < text.size()) {
    if (text[i] != 'e' && text[i] != 'E') fail();
    ++i;
    bool exp_negative = false;
    if (i < text.size() && (text[i] == '+' || text[i] == '-')) {
      exp_negative = text[i] == '-';
      ++i;
    }
    if (i >= text.size()) fail();
    int exponent = 0;
    for (; i < text.size(); ++i) {
      if (!std::isdigit(static_cast<unsigned char>(text[i]))) fail();
      exponent = exponent * 10 + (text[i] - '0');
      if (exponent > kMaxScale) fail();
    }
    scale += exp_negative ? exponent : -exponent;
  }
  if (scale < 0) {
    mantissa *= pow10(-scale);
    scale = 0;
  }
  return normalized(negative ? -mantissa : mantissa, scale);
}

std::string Decimal::to_string() const {
  std::uint64_t magnitude = mantissa_ < 0 ? 0 - static_cast<std::uint64_t>(mantissa_)
                                          : static_cast<std::uint64_t>(mantissa_);
  std::string digits = std::to_string(magnitude);
  std::string out = mantissa_ < 0 ? "-" : "";
  if (scale_ == 0) return out + digits;
  if (static_cast<int>(digits.size()) <= scale_) {
    digits.insert(0, static_cast<std::size_t>(scale_ - static_cast<int>(digits.size()) + 1), '0');
  }
  digits.insert(digits.size() - static_cast<std::size_t>(scale_), ".");
  return out + digits;
}

double Decimal::to_double() const { return std::strtod(to_string().c_str(), nullptr); }

Decimal Decimal::operator*(const Decimal& other) const {
  return normalized(static_cast<__int128>(mantissa_) * other.mantissa_, scale_ + other.scale_);
}

std::strong_ordering operator<=>(const Decimal& a, const Decimal& b) {
  int scale = std::max(a.scale_, b.scale_);
  __int128 lhs = static_cast<__int128>(a.mantissa_) * pow10(scale - a.scale_);
  __int128 rhs = static_cast<__int128>(b.mantissa_) * pow10(scale - b.scale_);
  return lhs <=> rhs;
}

}  // namespace stagehpo
