#include "qnls/fit.hpp"

#include <cmath>

#include <fmt/core.h>

#include "qnls/error.hpp"

namespace qnls {

FitResult fit_power_law(const std::vector<double>& t, const std::vector<double>& v, const FitOptions& opts,
                        const std::vector<bool>& guard) {
  if (t.size() != v.size()) throw DomainError("fit_power_law: t and v differ in length");
  if (opts.mode == FitMode::Blowup && !opts.blowup_time) {
    throw DomainError("fit_power_law: blowup mode needs a blowup time");
  }
  std::vector<double> X, Y;
  FitResult r;
  r.t_lo = INFINITY;
  r.t_hi = -INFINITY;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < opts.t_lo || t[i] > opts.t_hi) continue;
    double x = 0.0;
    if (opts.mode == FitMode::Decay) {
      if (!(t[i] > 0.0)) continue;
      x = std::log(t[i]);
    } else {
      const double gap = *opts.blowup_time - t[i];
      if (!(gap > 0.0)) continue;
      x = std::log(gap);
    }
    if (!(v[i] > 0.0)) throw DomainError(fmt::format("fit_power_law: value at index {} is not positive ({})", i, v[i]));
    if (i < guard.size() && guard[i]) r.valid = false;
    X.push_back(x);
    Y.push_back(std::log(v[i]));
    r.t_lo = std::min(r.t_lo, t[i]);
    r.t_hi = std::max(r.t_hi, t[i]);
  }
  r.n_points = X.size();
  if (r.n_points < 4) throw DomainError(fmt::format("fit_power_law: {} points in window (need >= 4)", r.n_points));

  const double n = static_cast<double>(r.n_points);
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    mx += X[i];
    my += Y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    sxx += (X[i] - mx) * (X[i] - mx);
    sxy += (X[i] - mx) * (Y[i] - my);
  }
  if (!(sxx > 0.0)) throw DomainError("fit_power_law: degenerate window");
  r.exponent = sxy / sxx;
  r.intercept = my - r.exponent * mx;
  double ssr = 0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    const double e = Y[i] - (r.intercept + r.exponent * X[i]);
    ssr += e * e;
  }
  r.stderr_exponent = std::sqrt(ssr / (n - 2.0) / sxx);
  if (!r.valid) r.note = "boundary guard tripped inside the window";
  return r;
}

std::vector<double> series_column(const std::vector<DiagnosticSample>& series, const std::string& name) {
  std::vector<double> out;
  out.reserve(series.size());
  for (const auto& s : series) {
    double v = 0.0;
    if (name == "t") v = s.t;
    else if (name == "mass") v = s.mass;
    else if (name == "energy") v = s.energy;
    else if (name == "grad2") v = s.grad2;
    else if (name == "grad") v = std::sqrt(s.grad2);
    else if (name == "gradh2") v = s.gradh2;
    else if (name == "potential") v = s.potential;
    else if (name == "variance") v = s.variance;
    else if (name == "y") v = s.y;
    else if (name == "Q") v = s.Q;
    else if (name == "theta") v = s.theta;
    else if (name == "P") v = s.P;
    else if (name == "linf") v = s.linf;
    else if (name == "tail") v = s.tail;
    else if (name == "boundary_mass") v = s.boundary_mass;
    else if (name == "dt") v = s.dt;
    else throw ConfigError(fmt::format("unknown series column '{}'", name));
    out.push_back(v);
  }
  return out;
}

FitResult fit_decay(const std::vector<DiagnosticSample>& series, const std::string& column, double t_lo,
                    double t_hi) {
  FitOptions opts;
  opts.t_lo = std::max(t_lo, 2.0);
  opts.t_hi = t_hi;
  std::string note;
  for (const auto& s : series) {
    if (s.t >= opts.t_lo && s.boundary_mass > kBoundaryGuard) {
      if (s.t < opts.t_hi) {
        opts.t_hi = s.t;
        note = fmt::format("window truncated at t={:.6g} by the boundary guard", s.t);
      }
      break;
    }
  }
  std::vector<bool> guard;
  for (const auto& s : series) guard.push_back(s.boundary_mass > kBoundaryGuard);
  auto r = fit_power_law(series_column(series, "t"), series_column(series, column), opts, guard);
  if (!note.empty()) r.note = r.note.empty() ? note : r.note + "; " + note;
  return r;
}

FitResult fit_blowup_rate(const std::vector<DiagnosticSample>& series, double T, double t_lo) {
  FitOptions opts;
  opts.mode = FitMode::Blowup;
  opts.blowup_time = T;
  opts.t_lo = t_lo;
  std::vector<bool> guard;
  for (const auto& s : series) guard.push_back(s.boundary_mass > kBoundaryGuard);
  return fit_power_law(series_column(series, "t"), series_column(series, "grad"), opts, guard);
}

}  // namespace qnls
