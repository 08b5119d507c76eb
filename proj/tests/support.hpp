#pragma once

// Small helpers shared by the unit tests: a seeded generator for property
// tests and a quadrature rule that copes with s^q, 0 < q < 1, at the origin.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace qtest {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool coin() { return integer(0, 1) == 1; }
  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

// n-point Gauss-Legendre nodes/weights on [-1, 1], Newton on P_n.
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::fabs(dz) < 1e-15) break;
    }
    x[i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
}

// ∫_0^s f, with dyadic panels refined toward 0.
inline double integrate_0_to(double s, const std::function<double(double)>& f) {
  std::vector<double> x, w;
  gauss_legendre(16, x, w);
  double total = 0.0;
  double hi = s;
  for (int panel = 0; panel < 80 && hi > 0.0; ++panel) {
    const double lo = panel == 79 ? 0.0 : 0.5 * hi;
    // wide panels are split so exponential integrands stay resolved
    const int pieces = static_cast<int>(std::ceil((hi - lo) / 2.0));
    const double width = (hi - lo) / pieces;
    for (int j = 0; j < pieces; ++j) {
      const double a = lo + j * width;
      const double mid = a + 0.5 * width, half = 0.5 * width;
      for (std::size_t i = 0; i < x.size(); ++i) total += w[i] * half * f(mid + half * x[i]);
    }
    hi = lo;
  }
  return total;
}

}  // namespace qtest
