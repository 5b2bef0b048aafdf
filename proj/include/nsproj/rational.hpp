#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace nsp {

/// Exact rational number on int64 numerator/denominator, always normalised
/// (gcd 1, positive denominator). Arithmetic goes through 128-bit
/// intermediates and throws std::overflow_error if a reduced result no
/// longer fits.
class Rational {
 public:
  constexpr Rational() = default;
  Rational(std::int64_t value) : num_(value) {}  // NOLINT: implicit by design
  Rational(std::int64_t num, std::int64_t den) { assign(num, den); }

  /// Exact conversion: every finite double is an integer times a power of two.
  static Rational from_double(double value);

  /// Parses "3", "-7/2" or a plain decimal literal like "0.25" exactly.
  static Rational parse(std::string_view text);

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }
  bool is_zero() const { return num_ == 0; }
  bool is_integer() const { return den_ == 1; }

  /// "n" or "n/d".
  std::string str() const;

  Rational operator-() const { return make_raw(-num_, den_); }
  Rational& operator+=(const Rational& other);
  Rational& operator-=(const Rational& other);
  Rational& operator*=(const Rational& other);
  Rational& operator/=(const Rational& other);

  friend Rational operator+(Rational a, const Rational& b) { return a += b; }
  friend Rational operator-(Rational a, const Rational& b) { return a -= b; }
  friend Rational operator*(Rational a, const Rational& b) { return a *= b; }
  friend Rational operator/(Rational a, const Rational& b) { return a /= b; }
  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }
  friend bool operator<(const Rational& a, const Rational& b);

 private:
  void assign(std::int64_t num, std::int64_t den);
  static Rational make_raw(std::int64_t num, std::int64_t den) {
    Rational r;
    r.num_ = num;
    r.den_ = den;
    return r;
  }
  static Rational reduce128(__int128 num, __int128 den);

  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

/// Dense row-major matrix of exact rationals. Only the handful of operations
/// the projection fixtures need.
class RationalMatrix {
 public:
  RationalMatrix() = default;
  RationalMatrix(int rows, int cols) : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  Rational& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  const Rational& operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }

  RationalMatrix multiply(const RationalMatrix& other) const;
  bool operator==(const RationalMatrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_ && data_ == other.data_;
  }

  std::vector<Rational> apply(const std::vector<Rational>& v) const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<Rational> data_;
};

}  // namespace nsp
