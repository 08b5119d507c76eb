#include "qnls/groundstate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/core.h>

#include "qnls/diagnostics.hpp"
#include "qnls/error.hpp"

namespace qnls {

namespace {

double sphere_area(int dim) {
  switch (dim) {
    case 1: return 2.0;
    case 2: return 2.0 * M_PI;
    default: return 4.0 * M_PI;
  }
}

struct NodeTables {
  std::vector<double> rho, h, dh, d2h, F, G;
  double h_far = 0.0;  // h(0) at the Dirichlet node
};

NodeTables tabulate(const NonlinearityModel& model, const std::vector<double>& w) {
  NodeTables t;
  const std::size_t m = w.size();
  t.rho.resize(m);
  t.h.resize(m);
  t.dh.resize(m);
  t.d2h.resize(m);
  t.F.resize(m);
  t.G.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    t.rho[i] = w[i] * w[i];
    const auto v = eval_nonlinearity(model, t.rho[i]);
    t.h[i] = v.h;
    t.dh[i] = v.dh;
    t.d2h[i] = v.d2h;
    t.F[i] = v.F;
    t.G[i] = v.G;
  }
  t.h_far = eval_nonlinearity(model, 0.0).h;
  return t;
}

// Thomas algorithm; sub/super are the off-diagonals (same, symmetric).
std::vector<double> solve_tridiagonal(const std::vector<double>& diag, const std::vector<double>& off,
                                      std::vector<double> rhs) {
  const std::size_t m = diag.size();
  std::vector<double> c(m, 0.0);
  double b = diag[0];
  c[0] = m > 1 ? off[0] / b : 0.0;
  rhs[0] /= b;
  for (std::size_t i = 1; i < m; ++i) {
    b = diag[i] - off[i - 1] * c[i - 1];
    if (i + 1 < m) c[i] = off[i] / b;
    rhs[i] = (rhs[i] - off[i - 1] * rhs[i - 1]) / b;
  }
  for (std::size_t i = m - 1; i-- > 0;) rhs[i] -= c[i] * rhs[i + 1];
  return rhs;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::vector<double> scaled(const std::vector<double>& w, double c) {
  std::vector<double> out(w);
  for (auto& v : out) v *= c;
  return out;
}

}  // namespace

double RadialGrid::weight(std::size_t i) const {
  return sphere_area(dim) * std::pow(node(i), dim - 1) * dr();
}

double RadialGrid::edge_weight(std::size_t i) const {
  const double re = static_cast<double>(i + 1) * dr();
  return sphere_area(dim) * std::pow(re, dim - 1) * dr();
}

RadialFunctionals radial_functionals(const NonlinearityModel& model, const RadialGrid& grid,
                                     const std::vector<double>& w) {
  const auto t = tabulate(model, w);
  const std::size_t m = w.size();
  const double dr = grid.dr();
  RadialFunctionals f;
  for (std::size_t i = 0; i < m; ++i) {
    const double wt = grid.weight(i);
    f.mass += wt * t.rho[i];
    f.potential += wt * t.G[i];
    f.rhoF += wt * t.rho[i] * t.F[i];

    const double A = grid.edge_weight(i);
    const double w_next = i + 1 < m ? w[i + 1] : 0.0;
    const double h_next = i + 1 < m ? t.h[i + 1] : t.h_far;
    const double rho_next = w_next * w_next;
    const double dw = (w_next - w[i]) / dr;
    const double dh = (h_next - t.h[i]) / dr;
    const double drho = (rho_next - t.rho[i]) / dr;
    f.grad2 += A * dw * dw;
    f.gradh2 += A * dh * dh;
    const double q_here = t.d2h[i] * t.dh[i] * t.rho[i];
    const double q_next = i + 1 < m ? t.d2h[i + 1] * t.dh[i + 1] * t.rho[i + 1] : 0.0;
    f.z += 0.25 * A * 0.5 * (q_here + q_next) * drho * drho;
  }
  return f;
}

double radial_action(const NonlinearityModel& model, const RadialGrid& grid, double omega,
                     const std::vector<double>& w) {
  const auto f = radial_functionals(model, grid, w);
  return 0.5 * omega * f.mass + 0.5 * (f.grad2 + f.gradh2 - f.potential);
}

std::vector<double> radial_action_gradient(const NonlinearityModel& model, const RadialGrid& grid,
                                           double omega, const std::vector<double>& w) {
  const auto t = tabulate(model, w);
  const std::size_t m = w.size();
  const double dr2 = grid.dr() * grid.dr();
  std::vector<double> g(m);
  for (std::size_t j = 0; j < m; ++j) {
    const double wt = grid.weight(j);
    const double w_next = j + 1 < m ? w[j + 1] : 0.0;
    const double h_next = j + 1 < m ? t.h[j + 1] : t.h_far;
    const double Ar = grid.edge_weight(j);
    double lap_w = Ar * (w[j] - w_next);
    double lap_h = Ar * (t.h[j] - h_next);
    if (j > 0) {
      const double Al = grid.edge_weight(j - 1);
      lap_w += Al * (w[j] - w[j - 1]);
      lap_h += Al * (t.h[j] - t.h[j - 1]);
    }
    g[j] = omega * wt * w[j] + lap_w / dr2 + 2.0 * w[j] * t.dh[j] * lap_h / dr2 - wt * t.F[j] * w[j];
  }
  return g;
}

double stationary_residual(const NonlinearityModel& model, const RadialGrid& grid, double omega,
                           const std::vector<double>& w) {
  const auto g = radial_action_gradient(model, grid, omega, w);
  double res = 0.0, norm = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double wt = grid.weight(i);
    res += g[i] * g[i] / wt;
    norm += wt * w[i] * w[i];
  }
  return std::sqrt(res) / (omega * std::sqrt(norm));
}

double radial_Q(const NonlinearityModel& model, const RadialGrid& grid, const std::vector<double>& w) {
  const auto f = radial_functionals(model, grid, w);
  const int N = grid.dim;
  return 2.0 * f.grad2 + (N + 2) * f.gradh2 + 8.0 * N * f.z - N * (f.rhoF - f.potential);
}

namespace {

// d/dc S(c w) = <∇S(c w), w>
double ray_slope(const NonlinearityModel& model, const RadialGrid& grid, double omega,
                 const std::vector<double>& w, double c) {
  return dot(radial_action_gradient(model, grid, omega, scaled(w, c)), w);
}

// Rescale w onto the maximum of c -> S(c w).
std::vector<double> nehari_project(const NonlinearityModel& model, const RadialGrid& grid, double omega,
                                   const std::vector<double>& w) {
  double lo = 1.0, hi = 1.0;
  double f_lo = ray_slope(model, grid, omega, w, 1.0);
  double f_hi = f_lo;
  if (f_lo > 0.0) {
    int k = 0;
    while (f_hi > 0.0) {
      if (++k > 200) {
        throw DomainError("ground-state iteration collapses to zero: the action has no maximum along rays");
      }
      lo = hi;
      f_lo = f_hi;
      hi *= 2.0;
      f_hi = ray_slope(model, grid, omega, w, hi);
    }
  } else {
    while (f_lo <= 0.0) {
      hi = lo;
      f_hi = f_lo;
      lo *= 0.5;
      if (lo < 1e-300) throw DomainError("ray maximum not bracketed");
      f_lo = ray_slope(model, grid, omega, w, lo);
    }
  }
  // Illinois regula falsi
  int side = 0;
  double c = lo;
  for (int it = 0; it < 200; ++it) {
    c = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
    if (hi - lo <= 1e-15 * hi) break;
    const double fc = ray_slope(model, grid, omega, w, c);
    if (fc == 0.0) break;
    if (fc > 0.0) {
      lo = c;
      f_lo = fc;
      if (side == -1) f_hi *= 0.5;
      side = -1;
    } else {
      hi = c;
      f_hi = fc;
      if (side == 1) f_lo *= 0.5;
      side = 1;
    }
    if (std::fabs(hi - lo) <= 1e-14 * c) break;
  }
  return scaled(w, c);
}

}  // namespace

RadialProfile solve_stationary(const NonlinearityModel& model, double omega, int dim, const RadialConfig& cfg) {
  model.validate();
  if (!(omega > 0.0) || !std::isfinite(omega)) throw DomainError("omega must be finite and > 0");
  if (dim < 1 || dim > 3) throw DomainError("dimension must be 1..3");
  if (!model.f2_terms.empty()) throw DomainError("stationary solver needs a purely focusing F (F2 = 0)");
  if (!model.has_focusing()) {
    throw DomainError("ground-state iteration collapses to zero: F has no focusing part");
  }
  if (cfg.m < 16) throw ConfigError("groundstate.m must be >= 16");

  RadialProfile p;
  p.omega = omega;
  p.grid = {dim, cfg.m, cfg.r_max.value_or(20.0 / std::sqrt(omega))};
  const auto& grid = p.grid;
  const std::size_t m = cfg.m;
  const double dr2 = grid.dr() * grid.dr();

  std::vector<double> w(m);
  for (std::size_t i = 0; i < m; ++i) w[i] = std::exp(-0.5 * omega * grid.node(i) * grid.node(i));
  w = nehari_project(model, grid, omega, w);
  double S = radial_action(model, grid, omega, w);
  p.action_history.push_back(S);

  double tau = cfg.step;
  std::vector<double> diag(m), off(m > 1 ? m - 1 : 0);
  for (std::size_t it = 0; it < cfg.max_iter; ++it) {
    p.residual = stationary_residual(model, grid, omega, w);
    p.iterations = it;
    if (p.residual <= cfg.tol) break;

    // preconditioner: ω·M + stiffness with the quasilinear weight 1 + 4ρh'²
    const auto t = tabulate(model, w);
    for (std::size_t j = 0; j < m; ++j) {
      const double qa = 1.0 + 4.0 * t.rho[j] * t.dh[j] * t.dh[j];
      const double qb = j + 1 < m ? 1.0 + 4.0 * t.rho[j + 1] * t.dh[j + 1] * t.dh[j + 1] : 1.0;
      const double ce = 0.5 * (qa + qb) * grid.edge_weight(j) / dr2;
      diag[j] = omega * grid.weight(j) + ce + (j > 0 ? -off[j - 1] : 0.0);
      if (j + 1 < m) off[j] = -ce;
    }
    const auto d = solve_tridiagonal(diag, off, radial_action_gradient(model, grid, omega, w));

    bool accepted = false;
    while (!accepted) {
      std::vector<double> trial(m);
      for (std::size_t j = 0; j < m; ++j) trial[j] = std::fabs(w[j] - tau * d[j]);
      trial = nehari_project(model, grid, omega, trial);
      const double S_trial = radial_action(model, grid, omega, trial);
      if (S_trial <= S + 1e-13 * std::fabs(S)) {
        w = std::move(trial);
        S = S_trial;
        accepted = true;
        tau = std::min(cfg.step, 1.5 * tau);
      } else {
        tau *= 0.5;
        if (tau < 1e-12) {
          throw ConvergenceError("ground-state iteration stalled (step underflow)", p.residual);
        }
      }
    }
    p.action_history.push_back(S);
    if (it + 1 == cfg.max_iter) {
      p.residual = stationary_residual(model, grid, omega, w);
      if (p.residual > cfg.tol) {
        throw ConvergenceError(fmt::format("ground state not converged after {} iterations", cfg.max_iter),
                               p.residual);
      }
    }
  }
  p.values = std::move(w);
  return p;
}

// ------------------------------------------------------------------- d_I

DIEstimate estimate_dI(const NonlinearityModel& model, const RadialProfile& profile, bool use_amplitude) {
  const auto& grid = profile.grid;
  const int N = grid.dim;
  const double omega = profile.omega;
  const double Nd = N;

  struct Point {
    bool ok = false;
    double S = 0.0, lambda = 1.0;
  };
  // Along v = c w(x/λ): Q = λ^{N-2}A(c) − λ^N B(c), so Q = 0 at λ² = A/B.
  auto at = [&](double c) {
    const auto f = radial_functionals(model, grid, scaled(profile.values, c));
    const double A = 2.0 * f.grad2 + (Nd + 2.0) * f.gradh2 + 8.0 * Nd * f.z;
    const double B = Nd * (f.rhoF - f.potential);
    Point p;
    if (!(A > 0.0) || !(B > 0.0)) return p;
    p.ok = true;
    p.lambda = std::sqrt(A / B);
    const double lN = std::pow(p.lambda, Nd), lN2 = std::pow(p.lambda, Nd - 2.0);
    p.S = 0.5 * omega * lN * f.mass + 0.5 * (lN2 * (f.grad2 + f.gradh2) - lN * f.potential);
    return p;
  };

  DIEstimate out;
  out.Q_unscaled = radial_Q(model, grid, profile.values);
  const Point base = at(1.0);
  if (!base.ok) throw DomainError("Q has no sign change along the dilation family of the profile");
  out.value = base.S;
  out.dilation = base.lambda;
  out.amplitude = 1.0;
  if (!use_amplitude) return out;

  // Local search on the amplitude axis. When c = 1 is a local maximum of the
  // constrained action the family is unbounded below (mass-subcritical
  // growth); the dilation-only value is then kept.
  const double h = 1e-3;
  const Point up = at(1.0 + h), down = at(1.0 - h);
  if (!up.ok || !down.ok) return out;
  if (up.S + down.S - 2.0 * base.S <= 0.0) return out;

  // golden-section on log c in [ln 1/2, ln 2]
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = std::log(0.5), b = std::log(2.0);
  auto value = [&](double lc) {
    const auto p = at(std::exp(lc));
    return p.ok ? p.S : INFINITY;
  };
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = value(x1), f2 = value(x2);
  for (int it = 0; it < 80 && b - a > 1e-10; ++it) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = value(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = value(x2);
    }
  }
  const double c = std::exp(0.5 * (a + b));
  const Point best = at(c);
  if (best.ok && best.S < out.value) {
    out.value = best.S;
    out.amplitude = c;
    out.dilation = best.lambda;
  }
  return out;
}

// --------------------------------------------------------------- certificate

std::string to_string(ThresholdVerdict v) {
  switch (v) {
    case ThresholdVerdict::Global: return "Global";
    case ThresholdVerdict::Blowup: return "Blowup";
    case ThresholdVerdict::Inconclusive: return "Inconclusive";
  }
  return "?";
}

ThresholdCertificate threshold_verdict(const Field& u0, const NonlinearityModel& model, double omega,
                                       double d_I) {
  ThresholdCertificate cert;
  cert.omega = omega;
  cert.d_I_estimate = d_I;
  const auto s = sample(u0, model, 0.0);
  cert.value = 0.5 * omega * s.mass + s.energy;
  cert.Q0 = s.Q;
  cert.y0 = s.y;

  // y is an integral of odd-looking terms; treat roundoff-level values as 0.
  const double y_scale = std::sqrt(std::max(s.variance, 0.0) * std::max(s.grad2, 0.0));
  const double y_tol = 1e-10 * std::max(y_scale, 1e-300);
  const bool y_nonneg = s.y >= -y_tol;
  const bool y_strict = s.y > y_tol;

  auto& audit = cert.hypothesis_audit;
  audit.push_back({"d_I > 0", d_I > 0.0, {{"d_I", d_I}}, ""});
  audit.push_back({"value < d_I", cert.value < d_I, {{"value", cert.value}, {"d_I", d_I}},
                   "conditional on the d_I estimate (an upper bound from a restricted family)"});
  audit.push_back({"sample valid", s.valid, {}, s.reason});
  const auto window = theorem3_window(model, u0.grid().dim());
  bool in_window = false;
  if (window) {
    double q = 0.0;
    if (model.f1_terms.size() == 1) q = model.f1_terms.front().exponent;
    in_window = q > window->lower && q < window->upper;
    audit.push_back({"focusing exponent inside admissible window", in_window,
                     {{"q", q}, {"lower", window->lower}, {"upper", window->upper}}, ""});
  } else {
    audit.push_back({"focusing exponent inside admissible window", false, {},
                     "model family outside the supported window computation"});
  }
  audit.push_back({"|x| u0 in L2 on the box", s.boundary_mass <= kBoundaryGuard,
                   {{"boundary_mass", s.boundary_mass}, {"J", s.variance}}, ""});
  audit.push_back({"Im<u0, x.grad u0> >= 0", y_nonneg, {{"y0", s.y}, {"tolerance", y_tol}},
                   y_strict ? "" : "y0 = 0 within roundoff: satisfies the >= 0 form only, not the strict form"});

  const bool below = d_I > 0.0 && cert.value < d_I && s.valid;
  if (below && cert.Q0 > 0.0) {
    cert.verdict = ThresholdVerdict::Global;
  } else if (below && cert.Q0 < 0.0 && y_nonneg) {
    cert.verdict = ThresholdVerdict::Blowup;
  } else {
    cert.verdict = ThresholdVerdict::Inconclusive;
  }
  return cert;
}

// ----------------------------------------------------------------- profile IO

void write_profile_csv(const std::filesystem::path& path, const RadialProfile& profile) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error(fmt::format("cannot open {} for writing", path.string()));
  os << "r,w\n";
  for (std::size_t i = 0; i < profile.values.size(); ++i) {
    os << fmt::format("{:.17g},{:.17g}\n", profile.grid.node(i), profile.values[i]);
  }
  // Dirichlet end, so interpolation from the file matches to_profile_spec
  os << fmt::format("{:.17g},0\n", profile.grid.r_max);
}

ProfileSpec read_profile_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error(fmt::format("cannot open {}", path.string()));
  ProfileSpec spec;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "r,w") continue;
    std::istringstream ss(line);
    double r = 0.0, w = 0.0;
    char comma = 0;
    if (!(ss >> r >> comma >> w) || comma != ',') {
      throw ConfigError(fmt::format("{}:{}: expected 'r,w'", path.string(), lineno));
    }
    spec.radius.push_back(r);
    spec.values.push_back(w);
  }
  if (spec.radius.size() < 2) throw ConfigError(fmt::format("{}: profile needs >= 2 rows", path.string()));
  return spec;
}

ProfileSpec to_profile_spec(const RadialProfile& profile, double scale) {
  ProfileSpec spec;
  spec.scale = scale;
  spec.radius.reserve(profile.values.size() + 1);
  for (std::size_t i = 0; i < profile.values.size(); ++i) spec.radius.push_back(profile.grid.node(i));
  spec.values = profile.values;
  // close the table at the Dirichlet node
  spec.radius.push_back(profile.grid.r_max);
  spec.values.push_back(0.0);
  return spec;
}

}  // namespace qnls
