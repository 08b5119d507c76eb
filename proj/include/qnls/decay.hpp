#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "qnls/diagnostics.hpp"
#include "qnls/model.hpp"

namespace qnls {

/// Sign classes of 2h''h's + h'², NF₁s − (N+2)G₁ and NF₂s − (N+2)G₂ on a
/// sampled s-grid, and the decay case they select.
struct DecayRouting {
  std::optional<int> decay_case;  // 1..8
  // sampled constants (nullopt when that branch does not apply)
  std::optional<double> k1;        // sup −B₂/G₂
  std::optional<double> k1_tilde;  // sup B₁/|G₁|
  std::optional<double> k2;        // sup −A/h'²
  // predicted decay exponent of ∫|∇h|² + |G₁| + G₂, i.e. −(2 − l)
  std::optional<double> predicted_exponent;
  bool uses_smallness = false;  // l depends on the smallness sum
  std::vector<AuditEntry> audit;
};

struct DecayRoutingOptions {
  double s_min = 1e-6;
  double s_max = 1e4;
  std::size_t samples = 2001;
  /// Σ_j (c_j‖u₀‖²)^{1/τ'_j}(c'_jC_s)^{1/τ_j}; when absent, cases 3–8 report
  /// the Σ → 0 limit.
  std::optional<double> smallness_sum;
};

DecayRouting route_decay_case(const NonlinearityModel& model, int dim, const DecayRoutingOptions& opts = {});

/// Hypotheses of the blowup-rate lower bound at blowup time T.
std::vector<AuditEntry> blowup_rate_conditions(const NonlinearityModel& model, int dim,
                                               const DiagnosticSample& s0, double T);

}  // namespace qnls
