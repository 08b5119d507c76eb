#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qnls/grid.hpp"
#include "qnls/model.hpp"

namespace qnls {

/// Every monitored functional at one time.
///
/// Q and theta read the |∇u|² inside their h''h' terms as |∇|u||², i.e.
/// |∇ρ|²/(4ρ) with ρ = |u|²; with that reading J'' = 4Q and P' = 4tθ hold
/// for complex data, not only for constant-phase data.
struct DiagnosticSample {
  double t = 0.0;
  double mass = 0.0;
  double energy = 0.0;
  double grad2 = 0.0;
  double gradh2 = 0.0;
  double potential = 0.0;  // ∫G(|u|²)
  double variance = 0.0;   // J
  double y = 0.0;
  double Q = 0.0;
  double theta = 0.0;
  double P = 0.0;
  double boundary_mass = 0.0;
  double linf = 0.0;
  double tail = 0.0;
  double dt = 0.0;
  std::vector<std::pair<double, double>> lp_norms;  // (p, ∫|u|^p)
  bool valid = true;
  std::string reason;
};

DiagnosticSample sample(const Field& f, const NonlinearityModel& model, double t,
                        const std::vector<double>& lp_list = {});

/// B = J − 4(T−t)y + 4(T−t)²(grad2 + gradh2 − ∫G). Throws DomainError when T <= t.
double conformal_B(const DiagnosticSample& s, double T);
double conformal_B(const Field& f, const NonlinearityModel& model, double t, double T);

inline constexpr double kBoundaryGuard = 1e-6;

struct IdentityResiduals {
  double r_mass = 0.0;
  double r_energy = 0.0;
  double r_J = 0.0;  // max |J' + 4y|
  double r_y = 0.0;  // max |y' + Q|
  double r_P = 0.0;  // max |P' − 4tθ|
  std::optional<double> r_B;  // max |B' + 4(T−t)θ| when T is supplied
  // scales for relative budgets
  double max_abs_y = 0.0;
  double max_abs_Q = 0.0;
  double max_abs_P = 0.0;
  bool variance_window_valid = true;  // boundary guard never tripped
  std::optional<double> first_invalid_t;
};

/// Residuals from centered differences on a uniformly spaced series (>= 5
/// samples). Endpoints are excluded from the derivative residuals.
IdentityResiduals identity_residuals(const std::vector<DiagnosticSample>& series,
                                     std::optional<double> blowup_time = std::nullopt);

struct TimeBound {
  std::optional<double> T0;
  double c = 0.0;  // c(k, N)
  std::string failed;  // which hypothesis failed, empty on success
};

/// T0 = d0² / (y(0) c(k,N)), c(k,N) = max(N(c_N − 1) − 2, (2k+1)N).
TimeBound theorem2_time_bound(const DiagnosticSample& s0, const NonlinearityModel& model, int dim);

/// Bare formula, exposed for tests.
double blowup_time_bound(double y0, double d0sq, double c);

}  // namespace qnls
