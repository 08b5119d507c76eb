#include "qnls/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/core.h>

#include "qnls/error.hpp"

namespace qnls {

DiagnosticSample sample(const Field& f, const NonlinearityModel& model, double t,
                        const std::vector<double>& lp_list) {
  const auto& g = f.grid();
  const int N = g.dim();
  const double dv = g.cell_volume();
  const auto u = f.values();
  const std::size_t size = u.size();

  DiagnosticSample s;
  s.t = t;
  s.mass = moment(f, Weight::One);
  s.variance = moment(f, Weight::AbsX2);
  s.grad2 = gradient_norm_sq(f);
  s.boundary_mass = boundary_mass_fraction(f);
  s.tail = spectral_tail_fraction(f);

  const auto du = spectral_gradient(f);
  const auto coords = g.coordinates();

  // pointwise tables shared by Q and theta
  std::vector<double> rho(size), h(size);
  double potential = 0.0, rhoF = 0.0, Z = 0.0, linf = 0.0, y = 0.0;
  try {
    for (std::size_t i = 0; i < size; ++i) {
      rho[i] = std::norm(u[i]);
      linf = std::max(linf, std::sqrt(rho[i]));
      const auto nv = eval_nonlinearity(model, rho[i]);
      h[i] = nv.h;
      potential += nv.G;
      rhoF += rho[i] * nv.F;
      double grad_rho2 = 0.0;
      for (int a = 0; a < N; ++a) {
        const complex d = du[static_cast<std::size_t>(a)][i];
        const double gr = 2.0 * (std::conj(u[i]) * d).real();
        grad_rho2 += gr * gr;
        y += coords[g.axis_index(i, a)] * (std::conj(u[i]) * d).imag();
      }
      if (nv.d2h != 0.0) Z += 0.25 * nv.d2h * nv.dh * rho[i] * grad_rho2;
    }
  } catch (const std::exception& e) {
    s.valid = false;
    s.reason = e.what();
    return s;
  }
  potential *= dv;
  rhoF *= dv;
  Z *= dv;
  s.y = y * dv;
  s.linf = linf;
  s.potential = potential;
  s.gradh2 = model.h_kind == HKind::Zero ? 0.0 : gradient_norm_sq(g, h);

  s.energy = 0.5 * (s.grad2 + s.gradh2 - potential);
  s.Q = 2.0 * s.grad2 + (N + 2) * s.gradh2 + 8.0 * N * Z - N * (rhoF - potential);
  s.theta = -N * s.gradh2 - 8.0 * N * Z + (N * rhoF - (N + 2) * potential);
  s.P = s.variance + 4.0 * t * s.y + 4.0 * t * t * (s.grad2 + s.gradh2 - potential);

  for (double p : lp_list) {
    double acc = 0.0;
    for (std::size_t i = 0; i < size; ++i) acc += std::pow(rho[i], 0.5 * p);
    s.lp_norms.emplace_back(p, acc * dv);
  }

  const double vals[] = {s.mass, s.energy, s.grad2, s.gradh2, s.variance, s.y, s.Q, s.theta, s.P};
  if (!std::all_of(std::begin(vals), std::end(vals), [](double v) { return std::isfinite(v); })) {
    s.valid = false;
    s.reason = "non-finite functional";
  }
  return s;
}

double conformal_B(const DiagnosticSample& s, double T) {
  if (!(T > s.t)) throw DomainError(fmt::format("conformal_B needs T > t (T={}, t={})", T, s.t));
  const double tau = T - s.t;
  return s.variance - 4.0 * tau * s.y + 4.0 * tau * tau * (s.grad2 + s.gradh2 - s.potential);
}

double conformal_B(const Field& f, const NonlinearityModel& model, double t, double T) {
  return conformal_B(sample(f, model, t), T);
}

IdentityResiduals identity_residuals(const std::vector<DiagnosticSample>& series,
                                     std::optional<double> blowup_time) {
  if (series.size() < 5) {
    throw DomainError(fmt::format("identity residuals need >= 5 samples (got {})", series.size()));
  }
  const double h = series[1].t - series[0].t;
  for (std::size_t i = 1; i < series.size(); ++i) {
    const double step = series[i].t - series[i - 1].t;
    if (!(h > 0.0) || std::fabs(step - h) > 1e-9 * std::max(1.0, std::fabs(h))) {
      throw DomainError("identity residuals need uniformly spaced samples");
    }
  }

  IdentityResiduals r;
  const auto& s0 = series.front();
  for (const auto& s : series) {
    r.r_mass = std::max(r.r_mass, std::fabs(s.mass - s0.mass) / s0.mass);
    const double escale = std::max(std::fabs(s0.energy), 1e-300);
    r.r_energy = std::max(r.r_energy, std::fabs(s.energy - s0.energy) / escale);
    r.max_abs_y = std::max(r.max_abs_y, std::fabs(s.y));
    r.max_abs_Q = std::max(r.max_abs_Q, std::fabs(s.Q));
    r.max_abs_P = std::max(r.max_abs_P, std::fabs(s.P));
    if (s.boundary_mass > kBoundaryGuard && r.variance_window_valid) {
      r.variance_window_valid = false;
      r.first_invalid_t = s.t;
    }
  }

  double rB = 0.0;
  for (std::size_t i = 1; i + 1 < series.size(); ++i) {
    const auto& a = series[i - 1];
    const auto& s = series[i];
    const auto& b = series[i + 1];
    const double dJ = (b.variance - a.variance) / (2.0 * h);
    const double dy = (b.y - a.y) / (2.0 * h);
    const double dP = (b.P - a.P) / (2.0 * h);
    r.r_J = std::max(r.r_J, std::fabs(dJ + 4.0 * s.y));
    r.r_y = std::max(r.r_y, std::fabs(dy + s.Q));
    r.r_P = std::max(r.r_P, std::fabs(dP - 4.0 * s.t * s.theta));
    if (blowup_time && *blowup_time > b.t) {
      const double dB = (conformal_B(b, *blowup_time) - conformal_B(a, *blowup_time)) / (2.0 * h);
      rB = std::max(rB, std::fabs(dB + 4.0 * (*blowup_time - s.t) * s.theta));
    }
  }
  if (blowup_time) r.r_B = rB;
  return r;
}

double blowup_time_bound(double y0, double d0sq, double c) {
  if (!(y0 > 0.0) || !(c > 0.0) || !(d0sq > 0.0)) {
    throw DomainError("blowup time bound needs y0 > 0, c > 0, d0^2 > 0");
  }
  return d0sq / (y0 * c);
}

TimeBound theorem2_time_bound(const DiagnosticSample& s0, const NonlinearityModel& model, int dim) {
  TimeBound out;
  // y of real data is zero up to rounding; positive means beyond that
  if (!(s0.y > 1e-10 * std::sqrt(s0.variance * s0.grad2))) {
    out.failed = "y(0) must be positive";
    return out;
  }
  if (!std::isfinite(s0.variance) || s0.boundary_mass > kBoundaryGuard) {
    out.failed = "d0^2 = J(0) must be finite and resolved on the box";
    return out;
  }
  const auto c = theorem2_constants(model, dim);
  if (!c) {
    out.failed = "no constants k, c_N, c_M for this model";
    return out;
  }
  const double N = dim;
  const double k = c->k;
  const double watershed = std::max(1.0 + 2.0 / N, 2.0 * (k + 1.0) + 2.0 / N);
  if (!(c->c_N > watershed)) {
    out.failed = fmt::format("c_N = {} does not exceed {}", c->c_N, watershed);
    return out;
  }
  const double E = s0.energy, M = s0.mass;
  // Which lower bound on y' is available depends on which energy condition
  // holds; each one licenses its own constant.
  const bool cond_a = 2.0 * (c->c_N - 1.0) * E + c->c_M * M <= 0.0;
  const bool cond_b = k > -0.5 && 2.0 * ((2.0 * k + 1.0) * N + 2.0) * E + N * c->c_M * M <= 0.0;
  const bool energy_ok =
      k <= -0.5 ? cond_a : 2.0 * ((2.0 * k + 1.0) * N + 2.0) * E + c->c_M * M <= 0.0;
  if (!energy_ok) {
    out.failed = k <= -0.5 ? "energy condition 2(c_N-1)E + c_M M <= 0 fails"
                           : "energy condition 2[(2k+1)N+2]E + c_M M <= 0 fails";
    return out;
  }
  double cc = 0.0;
  if (cond_a) cc = std::max(cc, N * (c->c_N - 1.0) - 2.0);
  if (cond_b) cc = std::max(cc, (2.0 * k + 1.0) * N);
  if (!(cc > 0.0)) {
    out.failed = "c(k,N) is not positive";
    return out;
  }
  out.c = cc;
  out.T0 = blowup_time_bound(s0.y, s0.variance, cc);
  return out;
}

}  // namespace qnls
