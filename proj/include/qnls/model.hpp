#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qnls/rational.hpp"

namespace qnls {

enum class HKind { Zero, PowerSum, Exponential, Rational };

/// coeff * s^exponent
struct PowerTerm {
  double coeff = 0.0;
  double exponent = 0.0;
};

/// sign * coeff * e^{rate s}; positive sign belongs to the focusing part F1.
struct ExpTerm {
  int sign = 1;
  double coeff = 0.0;
  double rate = 0.0;
};

/// Symbolic nonlinearities h and F = F1 - F2 of
///   i u_t = Δu + 2u h'(|u|²) Δh(|u|²) + F(|u|²) u.
///
/// h_terms is read per family: PowerSum uses every (a_l, p_l); Exponential
/// uses the single term (a, k) for h = a e^{ks}; Rational uses (A, l) for
/// h = A / (1 + s^l).
struct NonlinearityModel {
  HKind h_kind = HKind::Zero;
  std::vector<PowerTerm> h_terms;
  std::vector<PowerTerm> f1_terms;
  std::vector<PowerTerm> f2_terms;
  std::vector<ExpTerm> f_exp_terms;

  /// Throws ConfigError when an invariant is broken.
  void validate() const;
  std::string describe() const;

  bool has_focusing() const;
  bool has_defocusing() const;
};

NonlinearityModel power_model(std::vector<PowerTerm> h, std::vector<PowerTerm> f1,
                              std::vector<PowerTerm> f2 = {});
NonlinearityModel exponential_h_model(double a, double k, std::vector<PowerTerm> f1,
                                      std::vector<PowerTerm> f2 = {});
NonlinearityModel rational_h_model(double amplitude, double l, std::vector<PowerTerm> f1,
                                   std::vector<PowerTerm> f2 = {});

struct NonlinearityValues {
  double h = 0.0, dh = 0.0, d2h = 0.0;
  double F = 0.0, F1 = 0.0, F2 = 0.0;
  double G = 0.0, G1 = 0.0, G2 = 0.0;
};

/// k*s above this triggers OverflowError.
inline constexpr double kExpOverflowThreshold = 700.0;

NonlinearityValues eval_nonlinearity(const NonlinearityModel& model, double s);

struct Theorem2Constants {
  double k = 0.0;
  double c_N = 0.0;
  double c_M = 0.0;
  double epsilon = 0.0;     // c_N back-off used for focusing power sums
  bool c_M_sampled = false;  // c_M obtained from a sampled supremum, not in closed form
};

/// Constants with s h'' <= k h' and c_N G <= sF + c_M s. The dimension, when
/// given, sets the default back-off to min(0.01, half the slack to the watershed).
std::optional<Theorem2Constants> theorem2_constants(const NonlinearityModel& model,
                                                    std::optional<int> dim = std::nullopt);

enum class Verdict { GlobalAllData, BlowupCapable, Critical, GlobalSmallData, Unknown };
std::string to_string(Verdict v);

struct AuditEntry {
  std::string condition;
  bool satisfied = false;
  std::vector<std::pair<std::string, double>> witness;
  std::string note;
};

/// Exponent witnesses (theta1, theta2, q1, q2) and the slacks of
/// (2*-2)theta_j + 2 q_j >= 2*. Only defined for N = 3.
struct Theorem1Exponents {
  double theta1 = 0.0, theta2 = 0.0, q1 = 0.0, q2 = 0.0;
  double slack1 = 0.0, slack2 = 0.0;
};

struct ExponentWindow {
  double lower = 0.0;
  double upper = 0.0;  // +inf when 2* is unbounded
  std::optional<Rational> lower_exact;
  std::optional<Rational> upper_exact;
};

struct RegimeReport {
  std::optional<double> k;
  std::optional<double> c_N;
  std::optional<double> c_M;
  /// Boundary focusing exponent max{2/N, 2k+1+2/N}.
  std::optional<double> watershed;
  std::optional<Rational> watershed_exact;
  std::optional<Theorem1Exponents> theorem1_exponents;
  std::optional<ExponentWindow> theorem3_window;
  std::optional<double> sobolev_constant;
  Verdict verdict = Verdict::Unknown;
  std::vector<AuditEntry> audit;
};

/// Best constant of ∫w^{2*} <= C_s (∫|∇w|²)^{2*/2}; only N = 3 has one.
std::optional<double> sobolev_constant(int dim);

RegimeReport classify_regime(const NonlinearityModel& model, int dim,
                             std::optional<double> mass_of_u0 = std::nullopt,
                             std::optional<double> cs_override = std::nullopt);

std::optional<ExponentWindow> theorem3_window(const NonlinearityModel& model, int dim);

}  // namespace qnls
