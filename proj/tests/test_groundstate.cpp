#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "qnls/diagnostics.hpp"
#include "qnls/error.hpp"
#include "qnls/groundstate.hpp"
#include "support.hpp"

using namespace qnls;
using doctest::Approx;

namespace {

// −w'' + ωw = w^{2σ+1}: w = [(σ+1)ω]^{1/(2σ)} sech^{1/σ}(σ√ω x)
double power_soliton(double x, double sigma, double omega) {
  return std::pow((sigma + 1) * omega, 1 / (2 * sigma)) * std::pow(1 / std::cosh(sigma * std::sqrt(omega) * x), 1 / sigma);
}

double max_error(const RadialProfile& p, const std::function<double(double)>& exact) {
  double e = 0.0;
  for (std::size_t i = 0; i < p.values.size(); ++i) e = std::max(e, std::fabs(p.values[i] - exact(p.grid.node(i))));
  return e;
}

const RadialProfile& cubic() {
  static const auto p = solve_stationary(power_model({}, {{1, 1}}), 1.0, 1);
  return p;
}

const RadialProfile& septic() {
  static const auto p = solve_stationary(power_model({}, {{1, 3}}), 1.0, 1);
  return p;
}

}  // namespace

TEST_CASE("radial grid quadrature") {
  RadialGrid g1{1, 1000, 5.0};
  double sum = 0.0;
  for (std::size_t i = 0; i < g1.m; ++i) sum += g1.weight(i);
  CHECK(sum == Approx(10.0).epsilon(1e-12));  // both half-lines
  RadialGrid g3{3, 4000, 2.0};
  sum = 0.0;
  for (std::size_t i = 0; i < g3.m; ++i) sum += g3.weight(i);
  CHECK(sum == Approx(4 * M_PI * 8 / 3).epsilon(1e-6));
}

TEST_CASE("cubic ground state") {
  const auto& p = cubic();
  CHECK(max_error(p, [](double r) { return std::sqrt(2.0) / std::cosh(r); }) <= 1e-3);
  CHECK(p.residual <= 1e-6);
  const auto m = power_model({}, {{1, 1}});
  const auto f = radial_functionals(m, p.grid, p.values);
  CHECK(std::fabs(radial_Q(m, p.grid, p.values)) <= 1e-3);
  CHECK(f.mass == Approx(4.0).epsilon(1e-4));
  CHECK(estimate_dI(m, p).value == Approx(4.0 / 3.0).epsilon(1e-2 / (4.0 / 3.0)));
}

TEST_CASE("Q of a tightly converged profile vanishes before rescaling") {
  RadialConfig cfg;
  cfg.m = 32768;
  cfg.tol = 1e-8;
  const auto m = power_model({}, {{1, 1}});
  const auto p = solve_stationary(m, 1.0, 1, cfg);
  const auto d = estimate_dI(m, p);
  CHECK(std::fabs(d.Q_unscaled) <= 1e-6);
}

TEST_CASE("septic ground state against the closed form") {
  const auto& p = septic();
  const auto m = power_model({}, {{1, 3}});
  CHECK(max_error(p, [](double r) { return power_soliton(r, 3, 1); }) <= 1e-3);

  // D* = ω/2‖w‖² + E(w) by quadrature of the closed form on [0, 20], doubled
  const double h = 1e-4;
  double mass = 0, grad = 0, pot = 0;
  for (double r = h / 2; r < 20; r += h) {
    const double w = power_soliton(r, 3, 1);
    // w' = -√ω tanh(3√ω r) w for σ = 3
    const double dw = -std::tanh(3 * r) * w;
    mass += 2 * w * w * h;
    grad += 2 * dw * dw * h;
    pot += 2 * std::pow(w, 8) / 4 * h;
  }
  const double D = 0.5 * mass + 0.5 * (grad - pot);
  CHECK(estimate_dI(m, p).value == Approx(D).epsilon(0.01));
}

TEST_CASE("no focusing term collapses to zero") {
  CHECK_THROWS_AS(solve_stationary(NonlinearityModel{}, 1.0, 1), DomainError);
  CHECK_THROWS_AS(solve_stationary(power_model({}, {}, {{1, 1}}), 1.0, 1), DomainError);
}

TEST_CASE("threshold certificates for the septic model") {
  const auto m = power_model({}, {{1, 3}});
  const auto& p = septic();
  const double dI = estimate_dI(m, p).value;
  const auto g = make_grid(1, 1024, 40.0);
  SUBCASE("half the ground state is global") {
    const auto c = threshold_verdict(synthesize_initial(g, to_profile_spec(p, 0.5)), m, 1.0, dI);
    CHECK(c.verdict == ThresholdVerdict::Global);
    CHECK(c.Q0 > 0);
    CHECK(c.value < dI);
  }
  SUBCASE("1.2 times the ground state is a blowup candidate") {
    const auto c = threshold_verdict(synthesize_initial(g, to_profile_spec(p, 1.2)), m, 1.0, dI);
    CHECK(c.verdict == ThresholdVerdict::Blowup);
    CHECK(c.Q0 < 0);
    CHECK(c.value < dI);
    CHECK(std::fabs(c.y0) <= 1e-10);
    CHECK_FALSE(c.hypothesis_audit.empty());
  }
  SUBCASE("above the level is inconclusive") {
    const auto c = threshold_verdict(synthesize_initial(g, to_profile_spec(p, 1.0)), m, 1.0, 0.1);
    CHECK(c.verdict == ThresholdVerdict::Inconclusive);
  }
}

TEST_CASE("profile CSV round trip") {
  const auto& p = cubic();
  const auto path = std::filesystem::temp_directory_path() / "qnls_profile_test.csv";
  write_profile_csv(path, p);
  const auto spec = read_profile_csv(path);
  const auto direct = to_profile_spec(p);
  REQUIRE(spec.radius.size() == direct.radius.size());
  for (std::size_t i = 0; i < spec.radius.size(); i += 97) {
    CHECK(spec.radius[i] == direct.radius[i]);
    CHECK(spec.values[i] == direct.values[i]);
  }
  CHECK(direct.radius.back() == p.grid.r_max);
  CHECK(direct.values.back() == 0.0);
  std::filesystem::remove(path);
}

// ---------------------------------------------------------------- properties

TEST_CASE("property: action gradient matches finite differences") {
  qtest::Gen gen(51);
  for (int trial = 0; trial < 12; ++trial) {
    const int dim = gen.integer(1, 3);
    const auto model = trial % 2 ? power_model({{gen.uniform(0.2, 1), gen.integer(1, 3) / 2.0}}, {{1, gen.uniform(0.5, 2)}})
                                 : power_model({}, {{1, gen.uniform(0.5, 3)}}, {{0.3, 1}});
    RadialGrid grid{dim, 64, 8.0};
    std::vector<double> w(grid.m);
    const double a = gen.uniform(0.5, 1.5), s = gen.uniform(0.8, 2.0);
    for (std::size_t i = 0; i < grid.m; ++i) w[i] = a * std::exp(-grid.node(i) * grid.node(i) / (2 * s * s));
    const double omega = gen.uniform(0.5, 2);
    const auto grad = radial_action_gradient(model, grid, omega, w);
    for (int probe = 0; probe < 5; ++probe) {
      const auto i = static_cast<std::size_t>(gen.integer(0, 40));
      auto up = w, dn = w;
      up[i] += 1e-6;
      dn[i] -= 1e-6;
      const double fd = (radial_action(model, grid, omega, up) - radial_action(model, grid, omega, dn)) / 2e-6;
      INFO("dim " << dim << " node " << i << " " << model.describe());
      CHECK(fd == Approx(grad[i]).epsilon(1e-4).scale(1e-8));
    }
  }
}

TEST_CASE("property: flow decreases the action and ends on Q = 0") {
  qtest::Gen gen(52);
  for (int trial = 0; trial < 6; ++trial) {
    const int dim = gen.integer(1, 2);
    const double q = dim == 1 ? gen.uniform(0.5, 3) : gen.uniform(0.5, 1.5);
    const auto model = power_model({}, {{1, q}});
    RadialConfig cfg;
    cfg.m = 2048;
    const double omega = gen.uniform(0.5, 2);
    const auto p = solve_stationary(model, omega, dim, cfg);
    for (std::size_t k = 1; k < p.action_history.size(); ++k) {
      CHECK(p.action_history[k] <= p.action_history[k - 1] + 1e-12 * std::fabs(p.action_history[k - 1]));
    }
    const auto f = radial_functionals(model, p.grid, p.values);
    const double positive = 2 * f.grad2 + (dim + 2) * f.gradh2 + dim * f.potential;
    INFO("dim " << dim << " q " << q << " omega " << omega);
    CHECK(std::fabs(radial_Q(model, p.grid, p.values)) <= 1e-4 * positive);
  }
}

TEST_CASE("property: a larger search family never raises the estimate") {
  qtest::Gen gen(53);
  for (int trial = 0; trial < 6; ++trial) {
    const auto model = power_model({}, {{1, gen.uniform(0.5, 3.5)}});
    RadialConfig cfg;
    cfg.m = 2048;
    const auto p = solve_stationary(model, gen.uniform(0.5, 2), 1, cfg);
    CHECK(estimate_dI(model, p, true).value <= estimate_dI(model, p, false).value + 1e-12);
  }
}
