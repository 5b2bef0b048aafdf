#include "nsproj/rational.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>

namespace nsp {

namespace {

std::int64_t checked_cast(__int128 value) {
  if (value > std::numeric_limits<std::int64_t>::max() ||
      value < std::numeric_limits<std::int64_t>::min()) {
    throw std::overflow_error("rational arithmetic overflow");
  }
  return static_cast<std::int64_t>(value);
}

__int128 gcd128(__int128 a, __int128 b) {
  if (a < 0) a = -a;
  if (b < 0) b = -b;
  while (b != 0) {
    __int128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

}  // namespace

void Rational::assign(std::int64_t num, std::int64_t den) {
  if (den == 0) throw std::domain_error("rational with zero denominator");
  *this = reduce128(num, den);
}

Rational Rational::reduce128(__int128 num, __int128 den) {
  if (den == 0) throw std::domain_error("rational with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  if (num == 0) return Rational{};
  __int128 g = gcd128(num, den);
  return make_raw(checked_cast(num / g), checked_cast(den / g));
}

Rational Rational::from_double(double value) {
  if (!std::isfinite(value)) throw std::domain_error("non-finite value has no rational form");
  if (value == 0.0) return Rational{};
  int exp = 0;
  double mant = std::frexp(value, &exp);  // value = mant * 2^exp, |mant| in [0.5, 1)
  // 53 mantissa bits make mant * 2^53 integral.
  auto scaled = static_cast<std::int64_t>(std::ldexp(mant, 53));
  exp -= 53;
  // Strip trailing zero bits before range-checking the exponent.
  while (scaled % 2 == 0 && exp < 0) {
    scaled /= 2;
    ++exp;
  }
  if (exp > 10 || exp < -62) {
    throw std::overflow_error("value " + std::to_string(value) + " has no int64 rational form");
  }
  __int128 num = scaled;
  __int128 den = 1;
  while (exp > 0) {
    num *= 2;
    --exp;
  }
  while (exp < 0) {
    den *= 2;
    ++exp;
  }
  return reduce128(num, den);
}

Rational Rational::parse(std::string_view text) {
  auto fail = [&] { throw std::invalid_argument("cannot parse rational: '" + std::string(text) + "'"); };
  if (text.empty()) fail();
  std::string s(text);
  if (auto slash = s.find('/'); slash != std::string::npos) {
    std::size_t pos_n = 0, pos_d = 0;
    std::int64_t num = std::stoll(s.substr(0, slash), &pos_n);
    std::int64_t den = std::stoll(s.substr(slash + 1), &pos_d);
    if (pos_n != slash || pos_d != s.size() - slash - 1) fail();
    return Rational(num, den);
  }
  bool negative = false;
  std::size_t i = 0;
  if (s[i] == '+' || s[i] == '-') {
    negative = s[i] == '-';
    ++i;
  }
  __int128 num = 0;
  __int128 den = 1;
  bool seen_digit = false;
  bool seen_dot = false;
  for (; i < s.size(); ++i) {
    if (s[i] == '.') {
      if (seen_dot) fail();
      seen_dot = true;
      continue;
    }
    if (s[i] < '0' || s[i] > '9') fail();
    seen_digit = true;
    num = num * 10 + (s[i] - '0');
    if (seen_dot) den *= 10;
    if (den > static_cast<__int128>(1) << 100) fail();
  }
  if (!seen_digit) fail();
  return reduce128(negative ? -num : num, den);
}

std::string Rational::str() const {
  if (den_ == 1) return std::to_string(num_);
  return std::to_string(num_) + "/" + std::to_string(den_);
}

Rational& Rational::operator+=(const Rational& other) {
  __int128 num = static_cast<__int128>(num_) * other.den_ + static_cast<__int128>(other.num_) * den_;
  __int128 den = static_cast<__int128>(den_) * other.den_;
  *this = reduce128(num, den);
  return *this;
}

Rational& Rational::operator-=(const Rational& other) {
  *this += -other;
  return *this;
}

Rational& Rational::operator*=(const Rational& other) {
  __int128 num = static_cast<__int128>(num_) * other.num_;
  __int128 den = static_cast<__int128>(den_) * other.den_;
  *this = reduce128(num, den);
  return *this;
}

Rational& Rational::operator/=(const Rational& other) {
  if (other.num_ == 0) throw std::domain_error("rational division by zero");
  __int128 num = static_cast<__int128>(num_) * other.den_;
  __int128 den = static_cast<__int128>(den_) * other.num_;
  *this = reduce128(num, den);
  return *this;
}

bool operator<(const Rational& a, const Rational& b) {
  return static_cast<__int128>(a.num_) * b.den_ < static_cast<__int128>(b.num_) * a.den_;
}

RationalMatrix RationalMatrix::multiply(const RationalMatrix& other) const {
  if (cols_ != other.rows_) throw std::invalid_argument("rational matrix shape mismatch");
  RationalMatrix out(rows_, other.cols_);
  for (int r = 0; r < rows_; ++r) {
    for (int k = 0; k < cols_; ++k) {
      const Rational& a = (*this)(r, k);
      if (a.is_zero()) continue;
      for (int c = 0; c < other.cols_; ++c) {
        const Rational& b = other(k, c);
        if (!b.is_zero()) out(r, c) += a * b;
      }
    }
  }
  return out;
}

std::vector<Rational> RationalMatrix::apply(const std::vector<Rational>& v) const {
  if (static_cast<int>(v.size()) != cols_) throw std::invalid_argument("rational matrix/vector shape mismatch");
  std::vector<Rational> out(rows_);
  for (int r = 0; r < rows_; ++r) {
    Rational acc;
    for (int c = 0; c < cols_; ++c) {
      const Rational& a = (*this)(r, c);
      if (!a.is_zero() && !v[c].is_zero()) acc += a * v[c];
    }
    out[r] = acc;
  }
  return out;
}

}  // namespace nsp
