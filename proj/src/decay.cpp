#include "qnls/decay.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/core.h>

#include "qnls/error.hpp"

namespace qnls {

namespace {

enum class Sign { NonNeg, NonPos, Pos, Neg, Mixed };

}  // namespace

DecayRouting route_decay_case(const NonlinearityModel& model, int dim, const DecayRoutingOptions& opts) {
  if (!(opts.s_min > 0.0) || !(opts.s_max > opts.s_min) || opts.samples < 2) {
    throw ConfigError("decay routing needs 0 < s_min < s_max and >= 2 samples");
  }
  const double N = dim;
  DecayRouting out;

  // A = 2h''h's + h'², B1 = NF₁s − (N+2)G₁, B2 = NF₂s − (N+2)G₂
  bool a_nonneg = true, a_neg = true;
  bool b1_nonpos = true, b1_pos = true;
  bool b2_nonneg = true, b2_neg = true;
  double k2 = 0.0, k1t = 0.0, k1 = 0.0;
  const double ratio = std::log(opts.s_max / opts.s_min) / static_cast<double>(opts.samples - 1);
  for (std::size_t i = 0; i < opts.samples; ++i) {
    const double s = opts.s_min * std::exp(ratio * static_cast<double>(i));
    const auto v = eval_nonlinearity(model, s);
    const double A = 2.0 * v.d2h * v.dh * s + v.dh * v.dh;
    const double B1 = N * v.F1 * s - (N + 2.0) * v.G1;
    const double B2 = N * v.F2 * s - (N + 2.0) * v.G2;
    // relative roundoff floor so exact zeros (e.g. F₂ = s² at N = 1) classify cleanly
    const double tol1 = 1e-12 * (N * std::fabs(v.F1 * s) + (N + 2.0) * std::fabs(v.G1));
    const double tol2 = 1e-12 * (N * std::fabs(v.F2 * s) + (N + 2.0) * std::fabs(v.G2));
    const double tolA = 1e-12 * (2.0 * std::fabs(v.d2h * v.dh * s) + v.dh * v.dh);

    if (A < -tolA) a_nonneg = false;
    if (!(A < -tolA)) a_neg = false;
    if (v.dh != 0.0 && A < 0.0) k2 = std::max(k2, -A / (v.dh * v.dh));

    if (B1 > tol1) b1_nonpos = false;
    if (!(B1 > tol1)) b1_pos = false;
    if (B1 > 0.0 && v.G1 != 0.0) k1t = std::max(k1t, B1 / std::fabs(v.G1));

    if (B2 < -tol2) b2_nonneg = false;
    if (!(B2 < -tol2)) b2_neg = false;
    if (B2 < 0.0 && v.G2 > 0.0) k1 = std::max(k1, -B2 / v.G2);
  }
  const Sign a = a_nonneg ? Sign::NonNeg : a_neg ? Sign::Neg : Sign::Mixed;
  const Sign b1 = b1_nonpos ? Sign::NonPos : b1_pos ? Sign::Pos : Sign::Mixed;
  const Sign b2 = b2_nonneg ? Sign::NonNeg : b2_neg ? Sign::Neg : Sign::Mixed;

  auto& audit = out.audit;
  audit.push_back({"2h''h's + h'^2 >= 0", a == Sign::NonNeg, {{"k2", k2}}, ""});
  audit.push_back({"NF1 s - (N+2)G1 <= 0", b1 == Sign::NonPos, {{"k1_tilde", k1t}}, ""});
  audit.push_back({"NF2 s - (N+2)G2 >= 0", b2 == Sign::NonNeg, {{"k1", k1}}, ""});
  if (a == Sign::Mixed || b1 == Sign::Mixed || b2 == Sign::Mixed) {
    audit.push_back({"sign conditions uniform on the sampled s-grid", false,
                     {{"s_min", opts.s_min}, {"s_max", opts.s_max}}, "no decay case applies"});
    return out;
  }
  if (a == Sign::Neg) out.k2 = k2;
  if (b1 == Sign::Pos) out.k1_tilde = k1t;
  if (b2 == Sign::Neg) out.k1 = k1;

  const int c = 1 + (b2 == Sign::Neg ? 1 : 0) + (b1 == Sign::Pos ? 2 : 0) + (a == Sign::Neg ? 4 : 0);
  out.decay_case = c;
  const double sigma = opts.smallness_sum.value_or(0.0);
  const double den = 1.0 - sigma;
  double l = 0.0;
  switch (c) {
    case 1: l = 0.0; break;
    case 2: l = k1; break;
    case 3: l = k1t * sigma / den; break;
    case 4: l = std::max(k1, k1t * sigma) / den; break;
    case 5: l = N * k2 / den; break;
    case 6: l = std::max(N * k2, k1) / den; break;
    case 7: l = (N * k2 + k1t * sigma) / den; break;
    default: l = std::max(k1, N * k2 + k1t * sigma) / den; break;
  }
  out.uses_smallness = c >= 3;
  const bool l_ok = den > 0.0 && l < 2.0;
  audit.push_back({fmt::format("decay case ({}) exponent l < 2", c), l_ok, {{"l", l}, {"smallness_sum", sigma}},
                   c >= 3 && !opts.smallness_sum ? "smallness sum not supplied; small-data limit reported" : ""});
  if (l_ok) out.predicted_exponent = -(2.0 - l);
  return out;
}

std::vector<AuditEntry> blowup_rate_conditions(const NonlinearityModel& model, int dim,
                                               const DiagnosticSample& s0, double T) {
  const double N = dim;
  bool a_ok = true, b_ok = true;
  double worst_a = -INFINITY, worst_b = INFINITY;
  for (int i = 0; i <= 2000; ++i) {
    const double s = 1e-6 * std::pow(10.0, 10.0 * i / 2000.0);
    const auto v = eval_nonlinearity(model, s);
    const double A = v.dh * v.dh + 2.0 * v.d2h * v.dh * s;
    const double B = N * v.F * s - (N + 2.0) * v.G;
    worst_a = std::max(worst_a, A);
    worst_b = std::min(worst_b, B);
    if (A > 1e-12 * (v.dh * v.dh + std::fabs(2.0 * v.d2h * v.dh * s))) a_ok = false;
    if (B < -1e-12 * (N * std::fabs(v.F * s) + (N + 2.0) * std::fabs(v.G))) b_ok = false;
  }
  const double lhs = -4.0 * T * T * s0.energy - s0.variance - 4.0 * T * s0.y;
  return {
      {"h'^2 + 2h''h's <= 0", a_ok, {{"max", worst_a}}, "sampled on s in [1e-6, 1e4]"},
      {"NFs - (N+2)G >= 0", b_ok, {{"min", worst_b}}, "sampled on s in [1e-6, 1e4]"},
      {"-4T^2 E - J(0) - 4T y(0) > 0", lhs > 0.0, {{"value", lhs}, {"T", T}}, ""},
  };
}

}  // namespace qnls
