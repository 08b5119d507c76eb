#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>

namespace qnls {

/// Exact fraction used for exponent bookkeeping (watersheds, admissible windows).
class Rational {
 public:
  constexpr Rational() = default;
  Rational(std::int64_t num, std::int64_t den = 1);

  /// Best approximation with denominator <= max_den, accepted only when it
  /// reproduces x to within tol.
  static std::optional<Rational> from_double(double x, std::int64_t max_den = 1000000,
                                             double tol = 1e-12);

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  double value() const { return static_cast<double>(num_) / static_cast<double>(den_); }
  std::string str() const;

  friend Rational operator+(const Rational& a, const Rational& b);
  friend Rational operator-(const Rational& a, const Rational& b);
  friend Rational operator*(const Rational& a, const Rational& b);
  friend Rational operator/(const Rational& a, const Rational& b);
  friend Rational operator-(const Rational& a) { return Rational(-a.num_, a.den_); }
  friend bool operator==(const Rational& a, const Rational& b) = default;
  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b);

 private:
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

Rational max(const Rational& a, const Rational& b);

}  // namespace qnls
