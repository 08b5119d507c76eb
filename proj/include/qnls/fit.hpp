#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "qnls/diagnostics.hpp"

namespace qnls {

struct FitResult {
  double exponent = 0.0;
  double intercept = 0.0;
  double stderr_exponent = 0.0;
  double t_lo = 0.0, t_hi = 0.0;
  std::size_t n_points = 0;
  bool valid = true;  // false when the boundary guard tripped inside the window
  std::string note;
};

enum class FitMode { Decay, Blowup };

struct FitOptions {
  FitMode mode = FitMode::Decay;
  std::optional<double> blowup_time;  // required for FitMode::Blowup
  double t_lo = -INFINITY;
  double t_hi = INFINITY;
};

/// OLS of log v against log t (Decay) or log(T − t) (Blowup) over the window.
/// guard[i] = true marks a sample whose boundary guard tripped.
FitResult fit_power_law(const std::vector<double>& t, const std::vector<double>& v, const FitOptions& opts,
                        const std::vector<bool>& guard = {});

/// Series column by CSV name (mass, energy, grad2, gradh2, variance, y, Q,
/// theta, P, linf, tail, boundary_mass, dt) plus "grad" = sqrt(grad2).
std::vector<double> series_column(const std::vector<DiagnosticSample>& series, const std::string& name);

/// Decay-window policy: start at max(t_lo, 2), stop at the first boundary trip.
FitResult fit_decay(const std::vector<DiagnosticSample>& series, const std::string& column, double t_lo = 2.0,
                    double t_hi = INFINITY);

/// log ||∇u||_2 against log(T − t) on samples with t < T.
FitResult fit_blowup_rate(const std::vector<DiagnosticSample>& series, double T, double t_lo = -INFINITY);

}  // namespace qnls
