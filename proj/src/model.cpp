#include "qnls/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/core.h>

#include "qnls/error.hpp"

namespace qnls {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool finite_positive(double x) { return std::isfinite(x) && x > 0.0; }

void check_power_terms(const std::vector<PowerTerm>& terms, const char* what) {
  for (const auto& t : terms) {
    if (!finite_positive(t.coeff) || !finite_positive(t.exponent)) {
      throw ConfigError(fmt::format("{}: coefficients and exponents must be finite and > 0 "
                                    "(got {} s^{})",
                                    what, t.coeff, t.exponent));
    }
  }
}

// d^order/ds^order of s^p at s, with the s = 0 limits made explicit.
double power_derivative(double p, double s, int order) {
  if (s > 0.0) {
    switch (order) {
      case 0: return std::pow(s, p);
      case 1: return p * std::pow(s, p - 1.0);
      default: {
        // s^1 has h'' = 0 exactly; pow(s, -1) would overflow on denormal s
        const double c = p * (p - 1.0);
        return c == 0.0 ? 0.0 : c * std::pow(s, p - 2.0);
      }
    }
  }
  const double shifted = p - order;
  if (order == 0) return 0.0;
  if (shifted > 0.0) return 0.0;
  if (shifted == 0.0) return order == 1 ? p : p * (p - 1.0);
  // Singular at the origin (s^p, p < order). Every use multiplies these by
  // u, ρ or ∇ρ, all zero where ρ = 0, so 0 keeps the products at their limit
  // instead of 0·inf.
  return 0.0;
}

double checked_exp(double rate, double s, const std::string& term) {
  if (rate * s > kExpOverflowThreshold) {
    throw OverflowError(fmt::format("exponential overflow in {}: k*s = {} > {}", term, rate * s,
                                    kExpOverflowThreshold));
  }
  return std::exp(rate * s);
}

std::optional<Rational> exact(double x) { return Rational::from_double(x); }

double max_exponent(const std::vector<PowerTerm>& terms) {
  double m = 0.0;
  for (const auto& t : terms) m = std::max(m, t.exponent);
  return m;
}

double min_exponent(const std::vector<PowerTerm>& terms) {
  double m = kInf;
  for (const auto& t : terms) m = std::min(m, t.exponent);
  return m;
}

bool focusing_is_power_only(const NonlinearityModel& m) {
  return std::none_of(m.f_exp_terms.begin(), m.f_exp_terms.end(),
                      [](const ExpTerm& e) { return e.sign > 0; });
}

bool defocusing_is_power_only(const NonlinearityModel& m) {
  return std::none_of(m.f_exp_terms.begin(), m.f_exp_terms.end(),
                      [](const ExpTerm& e) { return e.sign < 0; });
}

// Largest s the sampled checks may visit without tripping the exponential guard.
double sample_ceiling(const NonlinearityModel& m) {
  double hi = 1e8;
  for (const auto& e : m.f_exp_terms) hi = std::min(hi, 0.95 * kExpOverflowThreshold / e.rate);
  if (m.h_kind == HKind::Exponential && !m.h_terms.empty()) {
    hi = std::min(hi, 0.95 * kExpOverflowThreshold / m.h_terms.front().exponent);
  }
  return hi;
}

std::vector<double> log_grid(double lo, double hi, int count) {
  std::vector<double> s(static_cast<std::size_t>(count));
  const double a = std::log(lo), b = std::log(hi);
  for (int i = 0; i < count; ++i) s[static_cast<std::size_t>(i)] = std::exp(a + (b - a) * i / (count - 1));
  return s;
}

// Sampled supremum of f over a log grid; nullopt when f is still growing at
// the top of the grid (no finite bound visible).
template <class Fn>
std::optional<double> sampled_supremum(Fn&& f, double hi) {
  const auto grid = log_grid(1e-8, hi, 4001);
  double best = -kInf;
  std::vector<double> values;
  values.reserve(grid.size());
  for (double s : grid) {
    const double v = f(s);
    values.push_back(v);
    best = std::max(best, v);
  }
  const std::size_t n = values.size();
  if (values[n - 1] > values[n - 2] && values[n - 1] >= best && values[n - 1] > 0.0) {
    return std::nullopt;
  }
  return best;
}

// Bound on the focusing exponent from the closed-form global-existence recipes:
// 2p-1+2/N when the quasilinear term dominates (p >= 1/2), 2/N otherwise.
struct QuasilinearBranch {
  bool supported = false;
  bool always_global = false;  // exponential h
  double p = 0.5;              // effective power
  double amplitude = 0.0;      // a in h = a s^p, 0 for h = 0
};

QuasilinearBranch quasilinear_branch(const NonlinearityModel& m) {
  QuasilinearBranch b;
  switch (m.h_kind) {
    case HKind::Zero:
      b.supported = true;
      break;
    case HKind::PowerSum: {
      b.supported = true;
      const auto top = std::max_element(m.h_terms.begin(), m.h_terms.end(),
                                        [](auto& x, auto& y) { return x.exponent < y.exponent; });
      if (top->exponent >= 0.5) {
        b.p = top->exponent;
        b.amplitude = top->coeff;
      }
      break;
    }
    case HKind::Rational:
      // bounded h: the Δu term carries the dispersion
      b.supported = true;
      break;
    case HKind::Exponential:
      b.supported = true;
      b.always_global = true;
      break;
  }
  return b;
}

}  // namespace

void NonlinearityModel::validate() const {
  switch (h_kind) {
    case HKind::Zero:
      if (!h_terms.empty()) throw ConfigError("h: kind zero takes no terms");
      break;
    case HKind::PowerSum:
      if (h_terms.empty()) throw ConfigError("h: power sum needs at least one term");
      check_power_terms(h_terms, "h");
      break;
    case HKind::Exponential:
      if (h_terms.size() != 1) throw ConfigError("h: exponential takes exactly one (a, k) term");
      check_power_terms(h_terms, "h");
      break;
    case HKind::Rational:
      if (h_terms.size() != 1) throw ConfigError("h: rational takes exactly one (A, l) term");
      check_power_terms(h_terms, "h");
      if (h_terms.front().exponent >= 1.0) throw ConfigError("h: rational exponent l must lie in (0,1)");
      break;
  }
  check_power_terms(f1_terms, "F1");
  check_power_terms(f2_terms, "F2");
  for (const auto& e : f_exp_terms) {
    if ((e.sign != 1 && e.sign != -1) || !finite_positive(e.coeff) || !finite_positive(e.rate)) {
      throw ConfigError("F: exponential terms need sign +-1 and finite positive (a, k)");
    }
  }
}

bool NonlinearityModel::has_focusing() const {
  return !f1_terms.empty() || !focusing_is_power_only(*this);
}

bool NonlinearityModel::has_defocusing() const {
  return !f2_terms.empty() || !defocusing_is_power_only(*this);
}

std::string NonlinearityModel::describe() const {
  auto sum = [](const std::vector<PowerTerm>& t) {
    if (t.empty()) return std::string("0");
    std::string out;
    for (std::size_t i = 0; i < t.size(); ++i) {
      out += fmt::format("{}{}*s^{}", i ? " + " : "", t[i].coeff, t[i].exponent);
    }
    return out;
  };
  std::string h;
  switch (h_kind) {
    case HKind::Zero: h = "0"; break;
    case HKind::PowerSum: h = sum(h_terms); break;
    case HKind::Exponential: h = fmt::format("{}*exp({}*s)", h_terms[0].coeff, h_terms[0].exponent); break;
    case HKind::Rational: h = fmt::format("{}/(1+s^{})", h_terms[0].coeff, h_terms[0].exponent); break;
  }
  std::string out = fmt::format("h(s) = {}; F1(s) = {}; F2(s) = {}", h, sum(f1_terms), sum(f2_terms));
  for (const auto& e : f_exp_terms) {
    out += fmt::format("; {}{}*exp({}*s)", e.sign > 0 ? "+" : "-", e.coeff, e.rate);
  }
  return out;
}

NonlinearityModel power_model(std::vector<PowerTerm> h, std::vector<PowerTerm> f1,
                              std::vector<PowerTerm> f2) {
  NonlinearityModel m;
  m.h_kind = h.empty() ? HKind::Zero : HKind::PowerSum;
  m.h_terms = std::move(h);
  m.f1_terms = std::move(f1);
  m.f2_terms = std::move(f2);
  m.validate();
  return m;
}

NonlinearityModel exponential_h_model(double a, double k, std::vector<PowerTerm> f1,
                                      std::vector<PowerTerm> f2) {
  NonlinearityModel m;
  m.h_kind = HKind::Exponential;
  m.h_terms = {{a, k}};
  m.f1_terms = std::move(f1);
  m.f2_terms = std::move(f2);
  m.validate();
  return m;
}

NonlinearityModel rational_h_model(double amplitude, double l, std::vector<PowerTerm> f1,
                                   std::vector<PowerTerm> f2) {
  NonlinearityModel m;
  m.h_kind = HKind::Rational;
  m.h_terms = {{amplitude, l}};
  m.f1_terms = std::move(f1);
  m.f2_terms = std::move(f2);
  m.validate();
  return m;
}

NonlinearityValues eval_nonlinearity(const NonlinearityModel& model, double s) {
  if (!std::isfinite(s) || s < 0.0) {
    throw DomainError(fmt::format("nonlinearity evaluated at s = {} (need finite s >= 0)", s));
  }
  NonlinearityValues v;
  switch (model.h_kind) {
    case HKind::Zero:
      break;
    case HKind::PowerSum:
      for (const auto& t : model.h_terms) {
        v.h += t.coeff * power_derivative(t.exponent, s, 0);
        v.dh += t.coeff * power_derivative(t.exponent, s, 1);
        v.d2h += t.coeff * power_derivative(t.exponent, s, 2);
      }
      break;
    case HKind::Exponential: {
      const auto& t = model.h_terms.front();
      const double e = checked_exp(t.exponent, s, "h");
      v.h = t.coeff * e;
      v.dh = t.coeff * t.exponent * e;
      v.d2h = t.coeff * t.exponent * t.exponent * e;
      break;
    }
    case HKind::Rational: {
      // h = A/(1+s^l)
      const double A = model.h_terms.front().coeff;
      const double l = model.h_terms.front().exponent;
      const double sl = power_derivative(l, s, 0);
      const double dsl = power_derivative(l, s, 1);
      const double d2sl = power_derivative(l, s, 2);
      const double w = 1.0 + sl;
      v.h = A / w;
      v.dh = -A * dsl / (w * w);
      v.d2h = -A * d2sl / (w * w) + 2.0 * A * dsl * dsl / (w * w * w);
      break;
    }
  }
  for (const auto& t : model.f1_terms) {
    const double sp = power_derivative(t.exponent, s, 0);
    v.F1 += t.coeff * sp;
    v.G1 += t.coeff * sp * s / (t.exponent + 1.0);
  }
  for (const auto& t : model.f2_terms) {
    const double sp = power_derivative(t.exponent, s, 0);
    v.F2 += t.coeff * sp;
    v.G2 += t.coeff * sp * s / (t.exponent + 1.0);
  }
  for (std::size_t i = 0; i < model.f_exp_terms.size(); ++i) {
    const auto& e = model.f_exp_terms[i];
    const double f = e.rate * s > kExpOverflowThreshold
                         ? e.coeff * checked_exp(e.rate, s,
                                                 fmt::format("F exponential term #{} ({}*exp({}*s))", i,
                                                             e.coeff, e.rate))
                         : e.coeff * std::exp(e.rate * s);
    const double g = e.coeff / e.rate * std::expm1(e.rate * s);
    if (e.sign > 0) {
      v.F1 += f;
      v.G1 += g;
    } else {
      v.F2 += f;
      v.G2 += g;
    }
  }
  v.F = v.F1 - v.F2;
  v.G = v.G1 - v.G2;
  return v;
}

std::optional<double> sobolev_constant(int dim) {
  if (dim != 3) return std::nullopt;
  // Aubin-Talenti: ||w||_{2*} <= S ||∇w||_2, S = (πN(N-2))^{-1/2} (Γ(N)/Γ(N/2))^{1/N}.
  const double N = 3.0;
  const double S = std::pow(M_PI * N * (N - 2.0), -0.5) *
                   std::pow(std::tgamma(N) / std::tgamma(N / 2.0), 1.0 / N);
  return std::pow(S, 2.0 * N / (N - 2.0));
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::GlobalAllData: return "GlobalAllData";
    case Verdict::BlowupCapable: return "BlowupCapable";
    case Verdict::Critical: return "Critical";
    case Verdict::GlobalSmallData: return "GlobalSmallData";
    case Verdict::Unknown: return "Unknown";
  }
  return "Unknown";
}

std::optional<Theorem2Constants> theorem2_constants(const NonlinearityModel& model,
                                                    std::optional<int> dim) {
  Theorem2Constants c;
  switch (model.h_kind) {
    case HKind::Zero: c.k = -0.5; break;
    case HKind::PowerSum: c.k = max_exponent(model.h_terms) - 1.0; break;
    case HKind::Rational: c.k = model.h_terms.front().exponent - 1.0; break;
    case HKind::Exponential: return std::nullopt;  // s h''/h' = k s is unbounded
  }
  if (model.f1_terms.empty() || !model.f_exp_terms.empty()) return std::nullopt;

  const double q_top = max_exponent(model.f1_terms);
  if (model.f1_terms.size() == 1 && model.f2_terms.empty()) {
    c.c_N = q_top + 1.0;
    c.c_M = 0.0;
    return c;
  }

  if (model.f1_terms.size() == 1) {
    c.c_N = q_top + 1.0;
  } else {
    double eps = 0.01;
    if (dim) {
      const double N = *dim;
      const double watershed = std::max(2.0 / N, 2.0 * c.k + 1.0 + 2.0 / N);
      const double slack = q_top - watershed;
      if (slack > 0.0) eps = std::min(0.01, 0.5 * slack);
    }
    c.epsilon = eps;
    c.c_N = q_top + 1.0 - eps;
  }

  const double cN = c.c_N;
  auto excess = [&](double s) {
    const auto v = eval_nonlinearity(model, s);
    // c_N G1 and s F1 cancel at large s; below this they are rounding noise
    const double diff = cN * v.G - s * v.F;
    const double noise = 1e-12 * (cN * (v.G1 + v.G2) + s * (v.F1 + v.F2));
    return (diff <= noise ? std::min(diff, 0.0) : diff) / s;
  };
  const auto sup = sampled_supremum(excess, sample_ceiling(model));
  if (!sup) return std::nullopt;
  // Scale-aware zero clamp for the closed-form c_M = 0 cases.
  double scale = 0.0;
  for (double s : {1e-3, 1.0, 1e3}) {
    const auto v = eval_nonlinearity(model, s);
    scale = std::max(scale, std::fabs(v.F) + std::fabs(cN * v.G / s));
  }
  c.c_M = *sup <= 1e-12 * scale ? 0.0 : *sup;
  c.c_M_sampled = c.c_M > 0.0;
  return c;
}

std::optional<ExponentWindow> theorem3_window(const NonlinearityModel& model, int dim) {
  if (dim < 1 || dim > 3) return std::nullopt;
  double p = 0.5;
  if (model.h_kind == HKind::PowerSum && model.h_terms.size() == 1) {
    p = model.h_terms.front().exponent;
    if (p < 0.5) return std::nullopt;
  } else if (model.h_kind != HKind::Zero) {
    return std::nullopt;
  }
  if (model.f1_terms.size() != 1 || !model.f2_terms.empty() || !model.f_exp_terms.empty()) {
    return std::nullopt;
  }
  const double N = dim;
  ExponentWindow w;
  w.lower = 2.0 * p - 1.0 + 2.0 / N;
  w.upper = dim == 3 ? p * 6.0 - 1.0 : std::numeric_limits<double>::infinity();
  if (const auto pe = exact(p)) {
    w.lower_exact = Rational(2) * *pe - Rational(1) + Rational(2, dim);
    if (dim == 3) w.upper_exact = *pe * Rational(6) - Rational(1);
  }
  return w;
}

RegimeReport classify_regime(const NonlinearityModel& model, int dim,
                             std::optional<double> mass_of_u0,
                             std::optional<double> cs_override) {
  model.validate();
  if (dim < 1 || dim > 3) throw ConfigError(fmt::format("dimension must be 1, 2 or 3 (got {})", dim));
  const double N = dim;
  RegimeReport r;
  r.sobolev_constant = cs_override ? cs_override : sobolev_constant(dim);
  r.theorem3_window = theorem3_window(model, dim);

  // Case (1): purely defocusing.
  if (!model.has_focusing()) {
    r.audit.push_back({"theorem1.case1: F = -F2 <= 0", true, {}, "energy controls every norm"});
    r.verdict = Verdict::GlobalAllData;
    if (const auto c = theorem2_constants(model, dim)) r.k = c->k;
    return r;
  }
  r.audit.push_back({"theorem1.case1: F = -F2 <= 0", false, {}, "focusing part present"});

  const auto constants = theorem2_constants(model, dim);
  std::optional<double> k;
  switch (model.h_kind) {
    case HKind::Zero: k = -0.5; break;
    case HKind::PowerSum: k = max_exponent(model.h_terms) - 1.0; break;
    case HKind::Rational: k = model.h_terms.front().exponent - 1.0; break;
    case HKind::Exponential: break;
  }
  r.k = k;
  if (constants) {
    r.c_N = constants->c_N;
    r.c_M = constants->c_M;
  }
  if (k) {
    r.watershed = std::max(2.0 / N, 2.0 * *k + 1.0 + 2.0 / N);
    if (const auto ke = exact(*k)) {
      r.watershed_exact = max(Rational(2, dim), Rational(2) * *ke + Rational(1) + Rational(2, dim));
    }
  }

  bool theorem1_certified = false;
  bool equality = false;
  bool small_data = false;

  const auto branch = quasilinear_branch(model);
  const bool power_focusing = focusing_is_power_only(model) && !model.f1_terms.empty();

  if (power_focusing && branch.supported) {
    const double q_min = min_exponent(model.f1_terms);
    const double q_max = max_exponent(model.f1_terms);
    const double bound = branch.p >= 0.5 && branch.amplitude > 0.0 ? 2.0 * branch.p - 1.0 + 2.0 / N
                                                                   : 2.0 / N;
    const std::string case_name = model.has_defocusing() ? "theorem1.case3(iv)" : "theorem1.case2";

    if (branch.always_global) {
      r.audit.push_back({case_name + ": exponential h dominates every power focusing term", true,
                         {{"theta1", 1.0 / (q_min + 1.0)}, {"theta2", 1.0 / (q_max + 1.0)}},
                         "q1, q2 may be taken arbitrarily large"});
      theorem1_certified = true;
    } else {
      if (dim == 3) {
        const double two_star = 6.0;
        Theorem1Exponents e;
        e.theta1 = 1.0 / (q_min + 1.0);
        e.q1 = ((q_min + 1.0) * two_star + 1.0) / (q_min + 1.0);
        e.theta2 = 1.0 / (q_max + 1.0);
        e.q2 = branch.p >= 0.5 && branch.amplitude > 0.0 ? branch.p * two_star / (q_max + 1.0)
                                                         : two_star / (2.0 * (q_max + 1.0));
        e.slack1 = (two_star - 2.0) * e.theta1 + 2.0 * e.q1 - two_star;
        e.slack2 = (two_star - 2.0) * e.theta2 + 2.0 * e.q2 - two_star;
        r.theorem1_exponents = e;
      }
      const auto qe = exact(q_max);
      const auto pe = exact(branch.p);
      std::optional<std::strong_ordering> cmp;
      if (qe && pe) {
        const Rational b = branch.p >= 0.5 && branch.amplitude > 0.0
                               ? Rational(2) * *pe - Rational(1) + Rational(2, dim)
                               : Rational(2, dim);
        cmp = *qe <=> b;
      }
      const bool below = cmp ? *cmp == std::strong_ordering::less : q_max < bound - 1e-12;
      const bool at = cmp ? *cmp == std::strong_ordering::equal : std::fabs(q_max - bound) <= 1e-12;
      AuditEntry entry{case_name + ": focusing exponent below the dispersive bound", below,
                       {{"q_max", q_max}, {"bound", bound}, {"p_eff", branch.p}}, ""};
      if (r.theorem1_exponents) {
        entry.witness.push_back({"theta1", r.theorem1_exponents->theta1});
        entry.witness.push_back({"theta2", r.theorem1_exponents->theta2});
        entry.witness.push_back({"q1", r.theorem1_exponents->q1});
        entry.witness.push_back({"q2", r.theorem1_exponents->q2});
        entry.witness.push_back({"slack1", r.theorem1_exponents->slack1});
        entry.witness.push_back({"slack2", r.theorem1_exponents->slack2});
      } else {
        entry.note = "2* unbounded for N <= 2: exponent recipe reduces to the closed-form bound";
      }
      r.audit.push_back(entry);
      theorem1_certified = below;
      equality = at;

      if (at) {
        AuditEntry small{"theorem1.small-data: smallness product < 1", false, {}, ""};
        const bool single = model.f1_terms.size() == 1 && !model.has_defocusing() &&
                            (model.h_kind == HKind::Zero ||
                             (model.h_kind == HKind::PowerSum && model.h_terms.size() == 1));
        if (dim != 3) {
          small.note = "2* undefined for N <= 2; smallness check unavailable";
        } else if (!mass_of_u0) {
          small.note = "mass of u0 not supplied";
        } else if (!single || !r.sobolev_constant) {
          small.note = "smallness constants only derived for single-power h and F";
        } else {
          const auto& e = *r.theorem1_exponents;
          const double b = model.f1_terms.front().coeff;
          const double g = b / (q_max + 1.0);
          const double c2 = std::pow(g, e.theta2);
          double lower = 1.0;  // [s^{1/2}+h]^{2*} >= lower * s^{p 2*} for s > 1
          if (branch.amplitude > 0.0) lower = branch.p == 0.5 ? 1.0 + branch.amplitude : branch.amplitude;
          const double eps2 = std::pow(g, e.q2) / std::pow(lower, 6.0);
          const double inv_tau = (e.q2 - 1.0) / (e.q2 - e.theta2);
          const double inv_tau_p = (1.0 - e.theta2) / (e.q2 - e.theta2);
          const double norm = std::sqrt(*mass_of_u0);
          const double product = std::pow(2.0, 5.0 * inv_tau_p) * std::pow(c2, inv_tau) *
                                 std::pow(eps2 * *r.sobolev_constant, inv_tau_p) *
                                 std::pow(norm, 2.0 * inv_tau);
          small.witness = {{"c2", c2}, {"eps2", eps2}, {"C_s", *r.sobolev_constant},
                           {"mass", *mass_of_u0}, {"product", product}};
          small.satisfied = product < 1.0;
          small_data = small.satisfied;
        }
        r.audit.push_back(small);
      }
    }
  }

  if (model.has_defocusing() && !theorem1_certified) {
    // (v): |G1(s)| <= c s + G2(s)
    auto excess = [&](double s) {
      const auto v = eval_nonlinearity(model, s);
      return (std::fabs(v.G1) - v.G2) / s;
    };
    const double hi = sample_ceiling(model);
    const auto sup = sampled_supremum(excess, hi);
    const bool tail_ok = sup && excess(hi) <= 0.0;
    AuditEntry v{"theorem1.case3(v): |G1| <= c s + G2", tail_ok, {}, "sampled on a log grid"};
    if (sup) v.witness.push_back({"c", std::max(0.0, *sup)});
    r.audit.push_back(v);
    theorem1_certified = tail_ok;

    if (power_focusing && defocusing_is_power_only(model) && !model.f2_terms.empty()) {
      const double qf_min = min_exponent(model.f1_terms), qf_max = max_exponent(model.f1_terms);
      const double qd_min = min_exponent(model.f2_terms), qd_max = max_exponent(model.f2_terms);
      const double beta1 = (qd_min + 1.0) / (qf_min + 1.0);
      const double beta2 = (qd_max + 1.0) / (qf_max + 1.0);
      const bool ok = beta1 > 1.0 && beta2 > 1.0;
      r.audit.push_back({"theorem1.case3(vi): defocusing dominates at both ends", ok,
                         {{"alpha1", 1.0 / (qf_min + 1.0)}, {"beta1", beta1},
                          {"alpha2", 1.0 / (qf_max + 1.0)}, {"beta2", beta2}},
                         ""});
      theorem1_certified = theorem1_certified || ok;
    }
  }

  bool blowup = false;
  if (constants) {
    const double threshold = std::max(1.0 + 2.0 / N, 2.0 * (constants->k + 1.0) + 2.0 / N);
    r.audit.push_back({"theorem2.(i): s h'' <= k h'", true, {{"k", constants->k}},
                       model.h_kind == HKind::Rational ? "h' <= 0 branch: s h'' >= k h'" : ""});
    std::optional<std::strong_ordering> cmp;
    const auto cn = exact(constants->c_N);
    const auto ke = exact(constants->k);
    if (cn && ke) {
      cmp = *cn <=> max(Rational(1) + Rational(2, dim),
                        Rational(2) * (*ke + Rational(1)) + Rational(2, dim));
    }
    const bool above = cmp ? *cmp == std::strong_ordering::greater : constants->c_N > threshold + 1e-12;
    const bool at = cmp ? *cmp == std::strong_ordering::equal
                        : std::fabs(constants->c_N - threshold) <= 1e-12;
    r.audit.push_back({"theorem2.(ii): c_N > max{1+2/N, 2(k+1)+2/N}, c_N G <= sF + c_M s", above,
                       {{"c_N", constants->c_N}, {"c_M", constants->c_M}, {"threshold", threshold},
                        {"epsilon", constants->epsilon}},
                       constants->c_M_sampled ? "c_M from a sampled supremum" : ""});
    blowup = above;
    equality = equality || at;
  } else {
    r.audit.push_back({"theorem2: constants (k, c_N, c_M)", false, {},
                       "no finite constants for this family"});
  }

  if (theorem1_certified) {
    r.verdict = Verdict::GlobalAllData;
  } else if (small_data) {
    r.verdict = Verdict::GlobalSmallData;
  } else if (blowup) {
    r.verdict = Verdict::BlowupCapable;
  } else if (equality) {
    r.verdict = Verdict::Critical;
  } else {
    r.verdict = Verdict::Unknown;
  }
  return r;
}

}  // namespace qnls
