#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "qnls/grid.hpp"
#include "qnls/model.hpp"

namespace qnls {

/// Cell-centred radial grid r_i = (i + 1/2) dr, i < m, with a mirror ghost at
/// r = -dr/2 (w'(0) = 0) and w = 0 at r = m dr. Quadrature weight per node is
/// |S^{N-1}| r^{N-1} dr with |S^0| = 2, so N = 1 covers the whole line.
struct RadialGrid {
  int dim = 1;
  std::size_t m = 0;
  double r_max = 0.0;
  double dr() const { return r_max / static_cast<double>(m); }
  double node(std::size_t i) const { return (static_cast<double>(i) + 0.5) * dr(); }
  double weight(std::size_t i) const;
  /// weight of the edge between node i and i+1 (i = m-1 is the Dirichlet edge)
  double edge_weight(std::size_t i) const;
};

struct RadialConfig {
  std::optional<double> r_max;  // default 20/sqrt(omega)
  std::size_t m = 4096;
  double step = 0.5;  // preconditioned step, backtracked
  std::size_t max_iter = 200000;
  double tol = 1e-6;
};

struct RadialProfile {
  double omega = 1.0;
  RadialGrid grid;
  std::vector<double> values;
  std::size_t iterations = 0;
  double residual = 0.0;
  std::vector<double> action_history;
};

/// Integrals of a radial profile; quasilinear ones use edge differences.
struct RadialFunctionals {
  double mass = 0.0;      // ∫w²
  double grad2 = 0.0;     // ∫|∇w|²
  double gradh2 = 0.0;    // ∫|∇h(w²)|²
  double z = 0.0;         // ¼∫h''h'ρ|∇ρ|²
  double potential = 0.0; // ∫G(w²)
  double rhoF = 0.0;      // ∫w²F(w²)
};

RadialFunctionals radial_functionals(const NonlinearityModel& model, const RadialGrid& grid,
                                     const std::vector<double>& w);

/// ω/2 ∫w² + ½(∫|∇w|² + ∫|∇h|² − ∫G)
double radial_action(const NonlinearityModel& model, const RadialGrid& grid, double omega,
                     const std::vector<double>& w);
/// Exact gradient of radial_action with respect to the node values.
std::vector<double> radial_action_gradient(const NonlinearityModel& model, const RadialGrid& grid,
                                           double omega, const std::vector<double>& w);
/// Weighted-L² norm of the stationary-equation residual over ω‖w‖.
double stationary_residual(const NonlinearityModel& model, const RadialGrid& grid, double omega,
                           const std::vector<double>& w);

double radial_Q(const NonlinearityModel& model, const RadialGrid& grid, const std::vector<double>& w);

RadialProfile solve_stationary(const NonlinearityModel& model, double omega, int dim,
                               const RadialConfig& cfg = {});

struct DIEstimate {
  double value = 0.0;  // upper bound for d_I over the searched family
  double amplitude = 1.0;
  double dilation = 1.0;
  double Q_unscaled = 0.0;  // Q(w) before any rescaling
};

/// Minimum of ω/2‖v‖² + E(v) over v = c·w(x/λ) with Q(v) = 0. With
/// use_amplitude = false only c = 1 is searched.
DIEstimate estimate_dI(const NonlinearityModel& model, const RadialProfile& profile, bool use_amplitude = true);

enum class ThresholdVerdict { Global, Blowup, Inconclusive };
std::string to_string(ThresholdVerdict v);

struct ThresholdCertificate {
  double omega = 0.0;
  double d_I_estimate = 0.0;
  double value = 0.0;
  double Q0 = 0.0;
  double y0 = 0.0;
  ThresholdVerdict verdict = ThresholdVerdict::Inconclusive;
  std::vector<AuditEntry> hypothesis_audit;
};

ThresholdCertificate threshold_verdict(const Field& u0, const NonlinearityModel& model, double omega,
                                       double d_I);

void write_profile_csv(const std::filesystem::path& path, const RadialProfile& profile);
/// Reads (r, w) rows into a ScaledProfile spec with scale 1.
ProfileSpec read_profile_csv(const std::filesystem::path& path);
ProfileSpec to_profile_spec(const RadialProfile& profile, double scale = 1.0);

}  // namespace qnls
