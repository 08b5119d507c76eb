#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "qnls/error.hpp"
#include "qnls/solver.hpp"
#include "support.hpp"

using namespace qnls;
using doctest::Approx;

namespace {

double l2_diff(const Field& a, const Field& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::norm(a[i] - b[i]);
  return std::sqrt(s * a.grid().cell_volume());
}

double l2(const Field& a) { return std::sqrt(moment(a, Weight::One)); }

StepperState state_of(const Field& f) { return StepperState{0.0, f, 0.0, 0}; }

Field evolve(const Field& u0, const NonlinearityModel& m, double tau, int steps) {
  auto s = state_of(u0);
  for (int i = 0; i < steps; ++i) s = strang_step(s, m, tau);
  return s.field;
}

// free solution of i u_t = u_xx from e^{-x²/2}: (1 - 2it)^{-1/2} exp(-x²/(2(1 - 2it)))
complex free_gaussian(double x, double t) {
  const complex a(1.0, -2.0 * t);
  return std::exp(-x * x / (2.0 * a)) / std::sqrt(a);
}

Field random_field(const Grid& g, qtest::Gen& gen, double amp) {
  Field f(g);
  const double w = gen.uniform(0.8, 2.0), b = gen.uniform(-0.5, 0.5), c = gen.uniform(-2, 2);
  for (std::size_t i = 0; i < f.size(); ++i) {
    double r2 = 0.0;
    for (int a = 0; a < g.dim(); ++a) {
      const double x = g.coordinate(g.axis_index(i, a));
      r2 += (x - c) * (x - c);
    }
    f[i] = std::polar(amp * std::exp(-r2 / (2 * w * w)) * (1 + 0.2 * std::cos(r2)), b * r2);
  }
  return f;
}

NonlinearityModel random_model(qtest::Gen& gen) {
  std::vector<PowerTerm> h, f1, f2;
  if (gen.coin()) h.push_back({gen.uniform(0.1, 1.0), gen.integer(1, 4) / 2.0});
  if (gen.coin()) f1.push_back({gen.uniform(0.1, 1.0), gen.uniform(0.5, 3.0)});
  if (gen.coin()) f2.push_back({gen.uniform(0.1, 1.0), gen.uniform(0.5, 3.0)});
  return power_model(h, f1, f2);
}

std::vector<DiagnosticSample> synthetic(std::function<double(double)> grad, double t_hi, int n,
                                        double tail = 0.0) {
  std::vector<DiagnosticSample> out;
  for (int i = 0; i < n; ++i) {
    DiagnosticSample s;
    s.t = t_hi * i / (n - 1);
    s.grad2 = grad(s.t) * grad(s.t);
    s.mass = 1.0;
    s.tail = tail;
    out.push_back(s);
  }
  return out;
}

}  // namespace

TEST_CASE("linear step: sign convention and identity") {
  const auto g = make_grid(1, 64, 2 * M_PI);
  Field f(g);
  const int k0 = 3;
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = std::polar(1.0, k0 * g.coordinate(i));
  const auto out = linear_half_step(f, 0.1);
  for (std::size_t i = 0; i < f.size(); ++i) {
    CHECK(std::abs(out[i] - std::polar(1.0, k0 * k0 * 0.1) * f[i]) <= 1e-13);
  }
  const auto same = linear_half_step(f, 0.0);
  for (std::size_t i = 0; i < f.size(); ++i) CHECK(same[i] == f[i]);
}

TEST_CASE("linear step reproduces the free Gaussian") {
  const auto g = make_grid(1, 512, 40.0);
  auto f = synthesize_initial(g, GaussianSpec{1, 1, 0});
  for (int i = 0; i < 100; ++i) f = linear_half_step(f, 0.01);
  double err = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) err = std::max(err, std::abs(f[i] - free_gaussian(g.coordinate(i), 1.0)));
  CHECK(err <= 1e-8);
}

TEST_CASE("nonlinear phase step") {
  const auto g = make_grid(1, 32, 10.0);
  SUBCASE("constant field rotates by |c|^2 tau") {
    const complex c(0.6, -0.8);
    Field f(g, std::vector<complex>(g.size(), c));
    const auto out = nonlinear_phase_step(f, power_model({}, {{1, 1}}), 0.3);
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(std::abs(out[i] - c * std::polar(1.0, -0.3)) <= 1e-15);
  }
  SUBCASE("tau = 0 leaves the field alone") {
    const auto f = synthesize_initial(g, GaussianSpec{1, 1, 0.2});
    const auto out = nonlinear_phase_step(f, power_model({{1, 1}}, {{1, 2}}), 0.0);
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(out[i] == f[i]);
  }
  SUBCASE("overflow is reported with the density") {
    NonlinearityModel m;
    m.f_exp_terms = {{1, 1.0, 100.0}};
    const auto f = synthesize_initial(g, GaussianSpec{3, 1, 0});
    CHECK_THROWS_AS(nonlinear_phase_step(f, m, 0.1), OverflowError);
  }
}

TEST_CASE("strang step with no nonlinearity is the linear flow") {
  const auto g = make_grid(1, 256, 30.0);
  const auto f = synthesize_initial(g, GaussianSpec{1, 1.2, 0.1});
  const auto s = strang_step(state_of(f), NonlinearityModel{}, 0.05);
  const auto lin = linear_half_step(f, 0.05);
  CHECK(l2_diff(s.field, lin) <= 1e-14);
  CHECK(s.t == 0.05);
  CHECK(s.steps == 1);
}

TEST_CASE("soliton keeps its modulus") {
  const auto g = make_grid(1, 512, 40.0);
  const auto u0 = synthesize_initial(g, SechSpec{std::sqrt(2.0), 1, 1});
  const auto u = evolve(u0, power_model({}, {{1, 1}}), 1e-3, 1000);
  double dev = 0.0, err = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dev = std::max(dev, std::fabs(std::abs(u[i]) - std::abs(u0[i])));
    err += std::norm(u[i] - std::polar(1.0, -1.0) * u0[i]);
  }
  CHECK(dev <= 1e-6);
  CHECK(std::sqrt(err * g.spacing()) <= 1e-4);
}

TEST_CASE("Strang splitting is second order on a quasilinear run") {
  const auto g = make_grid(1, 256, 40.0);
  const auto u0 = synthesize_initial(g, GaussianSpec{0.5, 1, 0});
  const auto m = power_model({{1, 1}}, {{1, 1}});
  const double T = 0.4, dt = 0.004;
  const auto ref = evolve(u0, m, dt / 8, int(std::lround(8 * T / dt)));
  const double e1 = l2_diff(evolve(u0, m, dt, int(std::lround(T / dt))), ref);
  const double e2 = l2_diff(evolve(u0, m, dt / 2, int(std::lround(2 * T / dt))), ref);
  INFO("errors " << e1 << " " << e2);
  CHECK(e1 / e2 >= 3.5);
  CHECK(e1 / e2 <= 4.5);
}

TEST_CASE("integrate") {
  SUBCASE("defocusing quasilinear run completes with exact mass") {
    const auto g = make_grid(1, 256, 40.0);
    SolverConfig cfg;
    cfg.dt0 = 2e-3;
    cfg.t_end = 5;
    const auto r = integrate(synthesize_initial(g, GaussianSpec{1, 1, 0}), power_model({{1, 1}}, {}, {{1, 1}}), cfg,
                             {100});
    CHECK(r.verdict.status == RunStatus::Completed);
    CHECK(r.final.t == Approx(5.0));
    for (const auto& s : r.series) CHECK(std::fabs(s.mass / r.series.front().mass - 1) <= 1e-10);
  }
  SUBCASE("focusing supercritical Gaussian blows up") {
    const auto g = make_grid(1, 1024, 20.0);
    const auto m = power_model({}, {{1, 3}});
    const auto u0 = synthesize_initial(g, GaussianSpec{3, 1, 0});
    CHECK(sample(u0, m, 0).energy < 0);
    SolverConfig cfg;
    cfg.dt0 = 1e-3;
    cfg.t_end = 1;
    cfg.adapt = true;
    const auto r = integrate(u0, m, cfg, {5});
    CHECK(r.verdict.status == RunStatus::BlowupDetected);
    REQUIRE(r.verdict.T_estimate);
    CHECK(*r.verdict.T_estimate > r.series.back().t * 0.9);
    CHECK(*r.verdict.T_estimate < 1.0);
  }
  SUBCASE("t_end = 0 gives one sample") {
    const auto g = make_grid(1, 64, 20.0);
    SolverConfig cfg;
    cfg.t_end = 0;
    const auto r = integrate(synthesize_initial(g, GaussianSpec{}), NonlinearityModel{}, cfg);
    CHECK(r.series.size() == 1);
    CHECK(r.verdict.status == RunStatus::Completed);
    CHECK(r.final.steps == 0);
  }
  SUBCASE("fixed steps land on t_end and checkpoints fire") {
    const auto g = make_grid(1, 64, 20.0);
    SolverConfig cfg;
    cfg.dt0 = 0.03;
    cfg.t_end = 1;
    IntegrateOptions opts;
    opts.checkpoint_every = 10;
    int calls = 0;
    opts.on_checkpoint = [&](const StepperState& s) {
      ++calls;
      CHECK(s.steps % 10 == 0);
    };
    const auto r = integrate(synthesize_initial(g, GaussianSpec{}), NonlinearityModel{}, cfg, opts);
    CHECK(r.final.t == Approx(1.0).epsilon(1e-14));
    CHECK(r.final.steps == 34);
    CHECK(calls == 3);
    CHECK(r.series.back().t == r.final.t);
  }
  SUBCASE("config validation") {
    SolverConfig bad;
    bad.dt0 = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = {};
    bad.dt_min = 1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = {};
    bad.tail_max = 1.5;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    CHECK(SolverConfig{}.resolved_dt_min() == Approx(1e-3 / 1048576.0));
  }
}

TEST_CASE("detect_blowup on synthetic series") {
  SolverConfig cfg;
  SUBCASE("reciprocal growth gives T near 1") {
    const auto s = synthetic([](double t) { return 1.0 / (1.0 - t); }, 0.9, 91);
    const auto T = estimate_blowup_time(s);
    REQUIRE(T);
    CHECK(*T == Approx(1.0).epsilon(0.02));
  }
  SUBCASE("bounded oscillation completes") {
    const auto s = synthetic([](double t) { return 2.0 + std::sin(5 * t); }, 10, 200);
    CHECK(detect_blowup(s, cfg).status == RunStatus::Completed);
  }
  SUBCASE("large tail with flat gradient is a resolution failure") {
    const auto s = synthetic([](double) { return 1.0; }, 1, 20, 0.5);
    CHECK(detect_blowup(s, cfg).status == RunStatus::ResolutionExceeded);
  }
  SUBCASE("gradient past the factor is blowup") {
    const auto s = synthetic([](double t) { return 1.0 / (1.0 - t); }, 0.9995, 400);
    const auto v = detect_blowup(s, cfg);
    CHECK(v.status == RunStatus::BlowupDetected);
    REQUIRE(v.T_estimate);
    CHECK(*v.T_estimate == Approx(1.0).epsilon(0.02));
  }
  SUBCASE("too few samples") {
    CHECK_THROWS_AS(detect_blowup(synthetic([](double) { return 1.0; }, 1, 3), cfg), DomainError);
  }
}

// ---------------------------------------------------------------- properties

TEST_CASE("property: mass is invariant for any model and step sequence") {
  qtest::Gen gen(31);
  for (int trial = 0; trial < 25; ++trial) {
    const int dim = gen.integer(1, 2);
    const auto g = make_grid(dim, dim == 1 ? 128 : 32, 16.0);
    const auto m = random_model(gen);
    auto s = state_of(random_field(g, gen, gen.uniform(0.2, 1.0)));
    const double m0 = moment(s.field, Weight::One);
    for (int k = 0; k < 20; ++k) s = strang_step(s, m, gen.uniform(-2e-3, 5e-3));
    INFO(m.describe());
    CHECK(std::fabs(moment(s.field, Weight::One) / m0 - 1) <= 1e-10);
  }
}

TEST_CASE("property: nonlinear substep preserves the pointwise modulus") {
  qtest::Gen gen(32);
  for (int trial = 0; trial < 40; ++trial) {
    const int dim = gen.integer(1, 3);
    const auto g = make_grid(dim, dim == 1 ? 128 : (dim == 2 ? 32 : 8), 12.0);
    const auto f = random_field(g, gen, gen.uniform(0.1, 2.0));
    const auto out = nonlinear_phase_step(f, random_model(gen), gen.uniform(-0.1, 0.1));
    for (std::size_t i = 0; i < f.size(); ++i) {
      CHECK(std::fabs(std::abs(out[i]) - std::abs(f[i])) <= 1e-13 * std::max(std::abs(f[i]), 1e-300));
    }
  }
}

TEST_CASE("property: a step and its reverse cancel") {
  qtest::Gen gen(33);
  for (int trial = 0; trial < 25; ++trial) {
    const auto g = make_grid(1, 128, 20.0);
    const auto m = random_model(gen);
    const auto f = random_field(g, gen, gen.uniform(0.2, 1.0));
    const double tau = gen.uniform(1e-4, 1e-2);
    const auto back = strang_step(strang_step(state_of(f), m, tau), m, -tau);
    CHECK(l2_diff(back.field, f) <= 1e-11 * l2(f));
  }
}

TEST_CASE("property: energy drift is second order") {
  const auto g = make_grid(1, 256, 30.0);
  const auto m = power_model({}, {{1, 1}});
  const auto u0 = synthesize_initial(g, GaussianSpec{1.2, 1, 0});
  auto drift = [&](double tau) {
    auto s = state_of(u0);
    const double e0 = sample(u0, m, 0).energy;
    double d = 0.0;
    for (int i = 0; i < int(std::lround(1.0 / tau)); ++i) {
      s = strang_step(s, m, tau);
      d = std::max(d, std::fabs(sample(s.field, m, s.t).energy - e0));
    }
    return d;
  };
  const double d1 = drift(0.01), d2 = drift(0.005);
  INFO("drifts " << d1 << " " << d2);
  CHECK(d1 / d2 >= 3.0);
}
