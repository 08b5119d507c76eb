#include "qnls/rational.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include <fmt/core.h>

#include "qnls/error.hpp"

namespace qnls {

namespace {

__extension__ typedef __int128 wide;

std::int64_t narrow(wide v) {
  if (v > INT64_MAX || v < INT64_MIN) throw OverflowError("rational overflow");
  return static_cast<std::int64_t>(v);
}

Rational make(wide num, wide den) {
  if (den == 0) throw DomainError("rational with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  wide a = num < 0 ? -num : num;
  wide b = den;
  while (b != 0) {
    wide t = a % b;
    a = b;
    b = t;
  }
  if (a > 1) {
    num /= a;
    den /= a;
  }
  return Rational(narrow(num), narrow(den));
}

}  // namespace

Rational::Rational(std::int64_t num, std::int64_t den) {
  if (den == 0) throw DomainError("rational with zero denominator");
  std::int64_t g = std::gcd(num, den);
  if (g == 0) g = 1;
  if (den < 0) g = -g;
  num_ = num / g;
  den_ = den / g;
}

std::optional<Rational> Rational::from_double(double x, std::int64_t max_den, double tol) {
  if (!std::isfinite(x)) return std::nullopt;
  // Continued-fraction convergents.
  const double sign = x < 0 ? -1.0 : 1.0;
  double rest = std::fabs(x);
  std::int64_t p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  for (int iter = 0; iter < 64; ++iter) {
    const double a = std::floor(rest);
    if (a > 1e15) break;
    const auto ai = static_cast<std::int64_t>(a);
    const std::int64_t p2 = ai * p1 + p0;
    const std::int64_t q2 = ai * q1 + q0;
    if (q2 > max_den) break;
    p0 = p1;
    q0 = q1;
    p1 = p2;
    q1 = q2;
    const double approx = static_cast<double>(p1) / static_cast<double>(q1);
    if (std::fabs(approx - std::fabs(x)) <= tol * std::max(1.0, std::fabs(x))) {
      return Rational(static_cast<std::int64_t>(sign) * p1, q1);
    }
    const double frac = rest - a;
    if (frac < 1e-300) break;
    rest = 1.0 / frac;
  }
  return std::nullopt;
}

std::string Rational::str() const {
  if (den_ == 1) return fmt::format("{}", num_);
  return fmt::format("{}/{}", num_, den_);
}

Rational operator+(const Rational& a, const Rational& b) {
  return make(static_cast<wide>(a.num_) * b.den_ + static_cast<wide>(b.num_) * a.den_,
              static_cast<wide>(a.den_) * b.den_);
}

Rational operator-(const Rational& a, const Rational& b) { return a + (-b); }

Rational operator*(const Rational& a, const Rational& b) {
  return make(static_cast<wide>(a.num_) * b.num_, static_cast<wide>(a.den_) * b.den_);
}

Rational operator/(const Rational& a, const Rational& b) {
  return make(static_cast<wide>(a.num_) * b.den_, static_cast<wide>(a.den_) * b.num_);
}

std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
  const wide lhs = static_cast<wide>(a.num_) * b.den_;
  const wide rhs = static_cast<wide>(b.num_) * a.den_;
  if (lhs < rhs) return std::strong_ordering::less;
  if (lhs > rhs) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

Rational max(const Rational& a, const Rational& b) { return a < b ? b : a; }

}  // namespace qnls
