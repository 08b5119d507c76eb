#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qnls/diagnostics.hpp"
#include "qnls/grid.hpp"
#include "qnls/model.hpp"

namespace qnls {

struct SolverConfig {
  double dt0 = 1e-3;
  std::optional<double> dt_min;  // defaults to dt0 * 2^-20
  double t_end = 1.0;
  bool adapt = false;
  double tail_max = 0.1;
  double grad_blowup_factor = 1e3;  // on ||∇u||_2 relative to t = 0
  double energy_jump_max = 1e-3;
  // When the step controller bottoms out, ||∇u||_2 must have grown at least
  // this much for the stop to count as blowup rather than lost resolution.
  double min_growth = 2.0;

  double resolved_dt_min() const;
  void validate() const;
};

struct StepperState {
  double t = 0.0;
  Field field;
  double dt = 0.0;
  std::size_t steps = 0;
};

enum class RunStatus { Completed, BlowupDetected, ResolutionExceeded };
std::string to_string(RunStatus s);

struct BlowupVerdict {
  RunStatus status = RunStatus::Completed;
  std::optional<double> T_estimate;
  std::string reason;
};

/// Exact flow of i u_t = Δu over τ: û_k ← e^{+i|k|²τ} û_k.
Field linear_half_step(const Field& f, double tau);

/// Exact flow of the pointwise phase subproblem: ρ = |f|² and Λ = Δh(ρ) are
/// frozen, f ← f·exp(−iτ[2h'(ρ)Λ + F(ρ)]).
Field nonlinear_phase_step(const Field& f, const NonlinearityModel& model, double tau);

/// L(τ/2) N(τ) L(τ/2).
StepperState strang_step(const StepperState& state, const NonlinearityModel& model, double tau);

/// Least-squares line through (t, 1/||∇u||_2) over the last decade of growth;
/// returns the zero crossing. nullopt when the fit is not decreasing.
std::optional<double> estimate_blowup_time(const std::vector<DiagnosticSample>& series);

/// resolution_lost: the step controller hit dt_min on a tail/energy trigger
/// (or the field went non-finite).
BlowupVerdict detect_blowup(const std::vector<DiagnosticSample>& series, const SolverConfig& cfg,
                            bool resolution_lost = false);

struct IntegrateOptions {
  std::size_t sample_every = 1;
  std::vector<double> lp_list;
  std::size_t checkpoint_every = 0;  // steps; 0 disables
  std::function<void(const StepperState&)> on_checkpoint;
};

struct IntegrationResult {
  std::vector<DiagnosticSample> series;
  BlowupVerdict verdict;
  StepperState final;
};

IntegrationResult integrate(const Field& u0, const NonlinearityModel& model, const SolverConfig& cfg,
                            const IntegrateOptions& opts = {});

}  // namespace qnls
