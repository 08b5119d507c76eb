#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "qnls/error.hpp"
#include "qnls/model.hpp"
#include "qnls/rational.hpp"
#include "support.hpp"

using namespace qnls;
using doctest::Approx;

namespace {

const AuditEntry* find_audit(const RegimeReport& r, const std::string& prefix) {
  for (const auto& a : r.audit) {
    if (a.condition.rfind(prefix, 0) == 0) return &a;
  }
  return nullptr;
}

// random model drawn from every family; exponential terms kept far from overflow
NonlinearityModel random_model(qtest::Gen& g) {
  auto terms = [&](int max_count, double pmin, double pmax) {
    std::vector<PowerTerm> t;
    const int count = g.integer(0, max_count);
    for (int i = 0; i < count; ++i) t.push_back({g.log_uniform(0.1, 5.0), g.uniform(pmin, pmax)});
    return t;
  };
  NonlinearityModel m;
  switch (g.integer(0, 3)) {
    case 0: m.h_kind = HKind::Zero; break;
    case 1:
      m.h_kind = HKind::PowerSum;
      m.h_terms = terms(3, 0.1, 3.0);
      if (m.h_terms.empty()) m.h_terms.push_back({1.0, 1.0});
      break;
    case 2:
      m.h_kind = HKind::Exponential;
      m.h_terms = {{g.log_uniform(0.1, 2.0), g.uniform(0.05, 0.5)}};
      break;
    default:
      m.h_kind = HKind::Rational;
      m.h_terms = {{g.log_uniform(0.1, 2.0), g.uniform(0.05, 0.95)}};
      break;
  }
  m.f1_terms = terms(3, 0.05, 4.0);
  m.f2_terms = terms(2, 0.05, 4.0);
  if (g.coin()) m.f_exp_terms.push_back({g.coin() ? 1 : -1, g.log_uniform(0.1, 2.0), g.uniform(0.01, 0.3)});
  m.validate();
  return m;
}

}  // namespace

TEST_CASE("rational arithmetic") {
  const Rational a(2, 3), b(-1, 6);
  CHECK(a + b == Rational(1, 2));
  CHECK(a * b == Rational(-1, 9));
  CHECK(a / b == Rational(-4));
  CHECK(Rational(4, -8) == Rational(-1, 2));
  CHECK(Rational(1, 3) < Rational(1, 2));
  CHECK(max(Rational(5, 3), Rational(3, 2)) == Rational(5, 3));
  CHECK(Rational(7, 3).str() == "7/3");
  CHECK(Rational(6, 3).str() == "2");
  CHECK(Rational::from_double(3.5) == Rational(7, 2));
  CHECK(Rational::from_double(2.0 / 3.0) == Rational(2, 3));
  CHECK_FALSE(Rational::from_double(M_PI, 100).has_value());
  CHECK_THROWS_AS(Rational(1, 0), DomainError);
}

TEST_CASE("eval_nonlinearity: monomials") {
  const auto m = power_model({{1, 2}}, {{1, 1}});
  const auto v = eval_nonlinearity(m, 2.0);
  CHECK(v.h == Approx(4.0));
  CHECK(v.dh == Approx(4.0));
  CHECK(v.d2h == Approx(2.0));
  CHECK(v.F == Approx(2.0));
  CHECK(v.G == Approx(2.0));
}

TEST_CASE("eval_nonlinearity: zero model") {
  const auto v = eval_nonlinearity(NonlinearityModel{}, 7.3);
  for (double x : {v.h, v.dh, v.d2h, v.F, v.F1, v.F2, v.G, v.G1, v.G2}) CHECK(x == 0.0);
}

TEST_CASE("eval_nonlinearity: exponential focusing term normalizes G(0) = 0") {
  NonlinearityModel m;
  m.f_exp_terms = {{1, 1.0, 2.0}};
  const auto v = eval_nonlinearity(m, 1.0);
  CHECK(v.G1 == Approx(0.5 * (std::exp(2.0) - 1.0)).epsilon(1e-14));
  const double quad = qtest::integrate_0_to(1.0, [](double s) { return std::exp(2.0 * s); });
  CHECK(std::fabs(v.G1 - quad) <= 1e-10);
  CHECK(eval_nonlinearity(m, 0.0).G == 0.0);
}

TEST_CASE("eval_nonlinearity: s = 0 limits and errors") {
  const auto lin = power_model({{1, 1}}, {{1, 0.5}});
  const auto v0 = eval_nonlinearity(lin, 0.0);
  CHECK(v0.dh == 1.0);
  CHECK(v0.d2h == 0.0);
  CHECK(v0.F == 0.0);
  // h'' of s must not turn into 0 * inf on denormal densities
  CHECK(eval_nonlinearity(lin, 1e-320).d2h == 0.0);
  CHECK_THROWS_AS(eval_nonlinearity(lin, -1.0), DomainError);
  CHECK_THROWS_AS(eval_nonlinearity(lin, INFINITY), DomainError);
  // singular derivatives at the origin stay finite
  const auto root = eval_nonlinearity(power_model({{1, 0.5}}, {{1, 0.25}}), 0.0);
  CHECK(std::isfinite(root.dh));
  CHECK(std::isfinite(root.d2h));

  NonlinearityModel e;
  e.f_exp_terms = {{1, 1.0, 10.0}};
  CHECK_THROWS_AS(eval_nonlinearity(e, 71.0), OverflowError);
  CHECK_NOTHROW(eval_nonlinearity(e, 69.0));
}

TEST_CASE("model validation") {
  CHECK_THROWS_AS(power_model({{1, -1}}, {}), ConfigError);
  CHECK_THROWS_AS(power_model({}, {{-2, 1}}), ConfigError);
  CHECK_THROWS_AS(power_model({}, {{1, NAN}}), ConfigError);
  CHECK_THROWS_AS(rational_h_model(1.0, 1.5, {}), ConfigError);
  CHECK_THROWS_AS(exponential_h_model(1.0, 0.0, {}), ConfigError);
  NonlinearityModel two_exp;
  two_exp.h_kind = HKind::Exponential;
  two_exp.h_terms = {{1, 1}, {1, 2}};
  CHECK_THROWS_AS(two_exp.validate(), ConfigError);
  NonlinearityModel bad_sign;
  bad_sign.f_exp_terms = {{0, 1, 1}};
  CHECK_THROWS_AS(bad_sign.validate(), ConfigError);
}

TEST_CASE("theorem2_constants examples") {
  SUBCASE("h = s, F1 = s^3") {
    const auto c = theorem2_constants(power_model({{1, 1}}, {{1, 3}}));
    REQUIRE(c);
    CHECK(c->k == 0.0);
    CHECK(c->c_N == 4.0);
    CHECK(c->c_M == 0.0);
  }
  SUBCASE("h = 0, F1 = s") {
    const auto c = theorem2_constants(power_model({}, {{1, 1}}));
    REQUIRE(c);
    CHECK(c->k == -0.5);
    CHECK(c->c_N == 2.0);
    CHECK(c->c_M == 0.0);
  }
  SUBCASE("h = e^s") { CHECK_FALSE(theorem2_constants(exponential_h_model(1, 1, {{1, 2}}))); }
  SUBCASE("h = s, F = s^4 - s keeps c_M = 0") {
    // 5G = s^5 - 5s^2/2 <= s^5 - s^2 = sF
    const auto c = theorem2_constants(power_model({{1, 1}}, {{1, 4}}, {{1, 1}}), 1);
    REQUIRE(c);
    CHECK(c->c_N == 5.0);
    CHECK(c->c_M == 0.0);
    CHECK_FALSE(c->c_M_sampled);
  }
  SUBCASE("power sum backs c_N off the top exponent") {
    const auto c = theorem2_constants(power_model({{1, 1}}, {{1, 1}, {1, 3.5}}), 1);
    REQUIRE(c);
    CHECK(c->epsilon == Approx(0.01));
    CHECK(c->c_N == Approx(4.49));
    CHECK(c->c_M > 0.0);
    CHECK(c->c_M_sampled);
    // small slack to the watershed halves it
    const auto tight = theorem2_constants(power_model({{1, 1}}, {{1, 1}, {1, 3.004}}), 1);
    REQUIRE(tight);
    CHECK(tight->epsilon == Approx(0.002));
  }
}

TEST_CASE("classify_regime examples") {
  SUBCASE("h = s, q = 3, N = 1 is critical") {
    const auto r = classify_regime(power_model({{1, 1}}, {{1, 3}}), 1);
    CHECK(r.verdict == Verdict::Critical);
    REQUIRE(r.watershed_exact);
    CHECK(*r.watershed_exact == Rational(3));
  }
  SUBCASE("h = 0, q = 1/2, N = 1 is global") {
    const auto r = classify_regime(power_model({}, {{1, 0.5}}), 1);
    CHECK(r.verdict == Verdict::GlobalAllData);
    CHECK(r.watershed_exact == Rational(2));
  }
  SUBCASE("rational h with l = 0.3, F = s^3, N = 1 blows up") {
    const auto r = classify_regime(rational_h_model(1.0, 0.3, {{1, 3}}), 1);
    CHECK(r.verdict == Verdict::BlowupCapable);
    REQUIRE(r.k);
    CHECK(*r.k == Approx(-0.7));
  }
  SUBCASE("purely defocusing is global for any h") {
    for (const auto& m : {power_model({{1, 1}}, {}, {{1, 1}}), power_model({}, {}, {{1, 1}}),
                          exponential_h_model(1, 1, {}, {{1, 1}}), rational_h_model(1, 0.5, {}, {{1, 1}})}) {
      const auto r = classify_regime(m, 1);
      CHECK(r.verdict == Verdict::GlobalAllData);
      const auto* a = find_audit(r, "theorem1.case1");
      REQUIRE(a);
      CHECK(a->satisfied);
    }
  }
  SUBCASE("audit is never empty for a decided verdict") {
    const auto r = classify_regime(power_model({{1, 1}}, {{1, 3.5}}), 1);
    CHECK(r.verdict == Verdict::BlowupCapable);
    CHECK_FALSE(r.audit.empty());
  }
}

TEST_CASE("theorem3_window examples") {
  const auto w = theorem3_window(power_model({{1, 1}}, {{1, 3}}), 3);
  REQUIRE(w);
  CHECK(w->lower_exact == Rational(5, 3));
  CHECK(w->upper_exact == Rational(5));

  const auto w0 = theorem3_window(power_model({}, {{1, 3}}), 1);
  REQUIRE(w0);
  CHECK(w0->lower_exact == Rational(2));
  CHECK(std::isinf(w0->upper));

  CHECK_FALSE(theorem3_window(exponential_h_model(1, 1, {{1, 3}}), 3));
}

TEST_CASE("Sobolev constant for N = 3") {
  const auto cs = sobolev_constant(3);
  REQUIRE(cs);
  // S^2 = 1/(3 (π/2)^{4/3}) for the Aubin-Talenti constant; C_s = S^6
  const double S2 = 1.0 / (3.0 * std::pow(M_PI / 2.0, 4.0 / 3.0));
  CHECK(*cs == Approx(S2 * S2 * S2).epsilon(1e-12));
  CHECK_FALSE(sobolev_constant(1));
}

// ---------------------------------------------------------------- properties

TEST_CASE("property: G matches quadrature of F") {
  qtest::Gen g(0x5eed01);
  for (int trial = 0; trial < 200; ++trial) {
    const auto m = random_model(g);
    const double s = g.log_uniform(1e-4, 1e3);
    const double quad = qtest::integrate_0_to(s, [&](double x) { return eval_nonlinearity(m, x).F; });
    const auto v = eval_nonlinearity(m, s);
    const double scale = std::max(qtest::integrate_0_to(s, [&](double x) {
                                    const auto e = eval_nonlinearity(m, x);
                                    return e.F1 + e.F2;
                                  }),
                                  1e-300);
    INFO("trial " << trial << " model " << m.describe() << " s=" << s);
    CHECK(std::fabs(v.G - quad) <= 1e-8 * scale);
  }
}

TEST_CASE("property: s h'' <= k h' for power sums") {
  qtest::Gen g(0x5eed02);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<PowerTerm> h;
    const int count = g.integer(1, 3);
    for (int i = 0; i < count; ++i) h.push_back({g.log_uniform(0.1, 5.0), g.uniform(0.1, 3.0)});
    const auto m = power_model(h, {{1, 2}});
    const auto c = theorem2_constants(m);
    REQUIRE(c);
    for (int i = 0; i < 500; ++i) {
      const double s = g.uniform(1e-9, 1e3);
      const auto v = eval_nonlinearity(m, s);
      CHECK(s * v.d2h - c->k * v.dh <= 1e-12 * (std::fabs(s * v.d2h) + std::fabs(c->k * v.dh)));
    }
  }
}

TEST_CASE("property: verdict depends on exponents only") {
  qtest::Gen g(0x5eed03);
  for (int trial = 0; trial < 60; ++trial) {
    const int N = g.integer(1, 3);
    const double p = g.uniform(0.1, 2.0);
    const double q = g.uniform(0.1, 5.0);
    const auto base = classify_regime(power_model({{1, p}}, {{1, q}}), N).verdict;
    for (int j = 0; j < 3; ++j) {
      const double a = g.log_uniform(1e-3, 1e3), b = g.log_uniform(1e-3, 1e3);
      CHECK(classify_regime(power_model({{a, p}}, {{b, q}}), N).verdict == base);
    }
  }
}

TEST_CASE("property: single powers partition across the watershed") {
  qtest::Gen g(0x5eed04);
  for (int trial = 0; trial < 40; ++trial) {
    const int N = g.integer(1, 3);
    const double p = g.integer(1, 8) / 4.0;  // dyadic so the watershed is exact
    const double ws = std::max(2.0 / N, 2.0 * p - 1.0 + 2.0 / N);
    const auto verdict = [&](double q) { return classify_regime(power_model({{1, p}}, {{1, q}}), N).verdict; };
    CHECK(verdict(ws * 0.7) == Verdict::GlobalAllData);
    CHECK(verdict(ws) == Verdict::Critical);
    // the blowup side needs c_N inside the Sobolev window in three dimensions
    const double above = ws + 0.25;
    if (N < 3 || above < 2.0 * std::max(p, 0.5) * 6.0 / 2.0 - 1.0) CHECK(verdict(above) == Verdict::BlowupCapable);
  }
}
