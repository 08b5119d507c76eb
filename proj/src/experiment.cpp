#include "qnls/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include <fftw3.h>
#include <fmt/core.h>

#include "qnls/checkpoint.hpp"
#include "qnls/decay.hpp"
#include "qnls/error.hpp"
#include "qnls/fit.hpp"

namespace qnls {

using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

json nullable(std::optional<double> v) { return v ? json(*v) : json(nullptr); }

json versions() {
  return {{"qnls", kVersion}, {"fftw", std::string(fftw_version)}, {"fmt", FMT_VERSION}};
}

json audit_json(const std::vector<AuditEntry>& audit) {
  json out = json::array();
  for (const auto& a : audit) {
    json w = json::object();
    for (const auto& [k, v] : a.witness) w[k] = v;
    out.push_back({{"condition", a.condition}, {"satisfied", a.satisfied}, {"witness", w}, {"note", a.note}});
  }
  return out;
}

json fit_json(const std::string& what, const FitResult& f) {
  return {{"quantity", what},        {"exponent", f.exponent}, {"intercept", f.intercept},
          {"stderr", f.stderr_exponent}, {"t_lo", f.t_lo},       {"t_hi", f.t_hi},
          {"n_points", f.n_points},  {"valid", f.valid},       {"note", f.note}};
}

json regime_json(const RegimeReport& r) {
  json j = {{"verdict", to_string(r.verdict)},
            {"k", nullable(r.k)},
            {"c_N", nullable(r.c_N)},
            {"c_M", nullable(r.c_M)},
            {"watershed", nullable(r.watershed)},
            {"watershed_exact", r.watershed_exact ? json(r.watershed_exact->str()) : json(nullptr)},
            {"sobolev_constant", nullable(r.sobolev_constant)},
            {"audit", audit_json(r.audit)}};
  if (r.theorem3_window) {
    j["theorem3_window"] = {{"lower", r.theorem3_window->lower},
                            {"upper", std::isfinite(r.theorem3_window->upper) ? json(r.theorem3_window->upper)
                                                                              : json("inf")}};
  }
  if (r.theorem1_exponents) {
    const auto& e = *r.theorem1_exponents;
    j["theorem1_exponents"] = {{"theta1", e.theta1}, {"theta2", e.theta2}, {"q1", e.q1},
                               {"q2", e.q2},         {"slack1", e.slack1}, {"slack2", e.slack2}};
  }
  return j;
}

json certificate_json(const ThresholdCertificate& c) {
  return {{"kind", "threshold"},     {"omega", c.omega},   {"d_I_estimate", c.d_I_estimate},
          {"value", c.value},        {"Q0", c.Q0},         {"y0", c.y0},
          {"verdict", to_string(c.verdict)}, {"audit", audit_json(c.hypothesis_audit)}};
}

json base_summary(const ExperimentConfig& cfg) {
  json config = json::object();
  for (const auto& [k, v] : cfg.source.entries()) config[k] = v;
  return {{"config", config},         {"kind", to_string(cfg.kind)}, {"verdict", nullptr},
          {"residuals", nullptr},     {"fits", json::array()},       {"certificates", json::array()},
          {"versions", versions()}};
}

void write_summary(const ExperimentConfig& cfg, const json& summary) {
  if (!cfg.output_dir) return;
  std::ofstream os(*cfg.output_dir / "summary.json");
  if (!os) throw std::runtime_error(fmt::format("cannot write {}", (*cfg.output_dir / "summary.json").string()));
  os << summary.dump(2) << "\n";
  std::ofstream ini(*cfg.output_dir / "config.ini");
  ini << cfg.source.to_ini();
}

void prepare_output(const ExperimentConfig& cfg) {
  if (!cfg.output_dir) return;
  std::error_code ec;
  std::filesystem::create_directories(*cfg.output_dir, ec);
  if (ec) throw ConfigError(fmt::format("output.dir {} is not writable: {}", cfg.output_dir->string(), ec.message()));
}

struct RunOutcome {
  IntegrationResult result;
  Field u0;
};

RunOutcome do_run(const ExperimentConfig& cfg) {
  Field u0 = initial_field(cfg);
  IntegrateOptions opts = cfg.integrate;
  std::filesystem::path ckpt_dir;
  if (cfg.output_dir && opts.checkpoint_every > 0) {
    ckpt_dir = *cfg.output_dir / "checkpoints";
    std::filesystem::create_directories(ckpt_dir);
    opts.on_checkpoint = [ckpt_dir](const StepperState& s) {
      write_checkpoint(ckpt_dir / fmt::format("step_{:08d}.qnls", s.steps), s.field, s.t);
    };
  }
  auto result = integrate(u0, cfg.model, cfg.solver, opts);
  if (cfg.output_dir) {
    write_series_csv(*cfg.output_dir / "diagnostics.csv", result.series);
    write_checkpoint(*cfg.output_dir / "final.qnls", result.final.field, result.final.t);
  }
  return {std::move(result), std::move(u0)};
}

bool uniform_spacing(const std::vector<DiagnosticSample>& series) {
  if (series.size() < 5) return false;
  const double h = series[1].t - series[0].t;
  for (std::size_t i = 1; i < series.size(); ++i) {
    if (std::fabs(series[i].t - series[i - 1].t - h) > 1e-9 * std::max(1.0, std::fabs(h))) return false;
  }
  return h > 0.0;
}

void attach_run(json& summary, const ExperimentConfig& cfg, const RunOutcome& run) {
  const auto& r = run.result;
  summary["verdict"] = to_string(r.verdict.status);
  summary["reason"] = r.verdict.reason;
  summary["T_estimate"] = nullable(r.verdict.T_estimate);
  summary["final_t"] = r.final.t;
  summary["steps"] = r.final.steps;
  if (uniform_spacing(r.series)) {
    summary["residuals"] = to_json(identity_residuals(r.series, r.verdict.T_estimate));
  } else {
    double rm = 0.0;
    for (const auto& s : r.series) rm = std::max(rm, std::fabs(s.mass - r.series.front().mass) / r.series.front().mass);
    summary["residuals"] = {{"r_mass", rm}, {"note", "non-uniform sampling: derivative identities skipped"}};
  }
  const auto bound = theorem2_time_bound(r.series.front(), cfg.model, cfg.dim);
  summary["certificates"].push_back({{"kind", "theorem2_time_bound"},
                                     {"T0", nullable(bound.T0)},
                                     {"c", bound.c},
                                     {"failed", bound.failed}});
}

}  // namespace

std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Run: return "run";
    case ExperimentKind::Sweep: return "sweep";
    case ExperimentKind::Classify: return "classify";
    case ExperimentKind::GroundState: return "groundstate";
    case ExperimentKind::FitDecay: return "fit_decay";
    case ExperimentKind::FitBlowupRate: return "fit_blowup_rate";
    case ExperimentKind::VerifyIdentities: return "verify";
  }
  return "?";
}

ExperimentKind parse_experiment_kind(const std::string& s) {
  const auto k = lower(s);
  if (k == "run") return ExperimentKind::Run;
  if (k == "sweep") return ExperimentKind::Sweep;
  if (k == "classify") return ExperimentKind::Classify;
  if (k == "groundstate" || k == "ground_state") return ExperimentKind::GroundState;
  if (k == "fit_decay" || k == "fitdecay") return ExperimentKind::FitDecay;
  if (k == "fit_blowup_rate" || k == "fitblowuprate") return ExperimentKind::FitBlowupRate;
  if (k == "verify" || k == "verify_identities" || k == "verifyidentities") return ExperimentKind::VerifyIdentities;
  throw ConfigError(fmt::format("experiment.kind: unknown kind '{}'", s));
}

ExperimentConfig resolve_config(const Config& cfg) {
  cfg.require({"experiment.kind", "grid.dim"});
  ExperimentConfig out;
  out.source = cfg;
  out.kind = parse_experiment_kind(cfg.get_string("experiment.kind"));
  out.dim = static_cast<int>(cfg.get_int("grid.dim"));
  if (out.dim < 1 || out.dim > 3) throw ConfigError("grid.dim must be 1, 2 or 3");

  const bool evolves = out.kind != ExperimentKind::Classify && out.kind != ExperimentKind::GroundState;
  std::vector<std::string> needed = {"model.h.kind"};
  if (evolves) {
    for (const char* k : {"grid.n", "grid.L", "initial.kind", "time.dt0", "time.t_end"}) needed.push_back(k);
  }
  if (out.kind == ExperimentKind::Sweep) {
    needed.push_back("sweep.path");
    needed.push_back("sweep.values");
  }
  if (out.kind == ExperimentKind::GroundState) needed.push_back("groundstate.omega");
  cfg.require(needed);

  out.model = model_from_config(cfg);
  out.cs_override = cfg.get_optional_double("model.cs_override");
  out.mass_of_u0 = cfg.get_optional_double("model.mass");
  if (cfg.has("output.dir")) out.output_dir = cfg.get_string("output.dir");

  if (evolves) {
    out.n = static_cast<std::size_t>(cfg.get_int("grid.n"));
    out.L = cfg.get_double("grid.L");
    auto& s = out.solver;
    s.dt0 = cfg.get_double("time.dt0");
    s.dt_min = cfg.get_optional_double("time.dt_min");
    s.t_end = cfg.get_double("time.t_end");
    s.adapt = cfg.get_bool("time.adapt", false);
    s.tail_max = cfg.get_double("detect.tail_max", s.tail_max);
    s.grad_blowup_factor = cfg.get_double("detect.grad_factor", s.grad_blowup_factor);
    s.min_growth = cfg.get_double("detect.min_growth", s.min_growth);
    s.energy_jump_max = cfg.get_double("detect.energy_jump", s.energy_jump_max);
    s.validate();
    auto& o = out.integrate;
    const long every = cfg.get_int("diagnostics.sample_every", 1);
    if (every < 1) throw ConfigError("diagnostics.sample_every must be >= 1");
    o.sample_every = static_cast<std::size_t>(every);
    if (cfg.has("diagnostics.lp_list")) o.lp_list = cfg.get_doubles("diagnostics.lp_list");
    const long ck = cfg.get_int("diagnostics.checkpoint_every", 0);
    if (ck < 0) throw ConfigError("diagnostics.checkpoint_every must be >= 0");
    o.checkpoint_every = static_cast<std::size_t>(ck);
    Grid probe(out.dim, out.n, out.L);  // validates n and L
    (void)probe;
  }

  out.omega = cfg.get_double("groundstate.omega", 1.0);
  if (!(out.omega > 0.0)) throw ConfigError("groundstate.omega must be > 0");
  out.radial.r_max = cfg.get_optional_double("groundstate.r_max");
  out.radial.m = static_cast<std::size_t>(cfg.get_int("groundstate.m", static_cast<long>(out.radial.m)));
  out.radial.step = cfg.get_double("groundstate.step", out.radial.step);
  out.radial.max_iter = static_cast<std::size_t>(cfg.get_int("groundstate.max_iter", static_cast<long>(out.radial.max_iter)));
  out.radial.tol = cfg.get_double("groundstate.tol", out.radial.tol);

  if (out.kind == ExperimentKind::VerifyIdentities) out.solver.adapt = false;  // needs uniform samples
  if (out.kind == ExperimentKind::Sweep) {
    out.sweep_path = cfg.get_string("sweep.path");
    out.sweep_values = cfg.get_doubles("sweep.values");
    if (out.sweep_values.empty()) throw ConfigError("sweep.values is empty");
    if (!cfg.path_exists(out.sweep_path)) {
      throw ConfigError(fmt::format("sweep.path '{}' does not exist in the config", out.sweep_path));
    }
  }
  out.fit_column = cfg.get_string("fit.column", out.fit_column);
  out.fit_t_lo = cfg.get_double("fit.t_lo", out.fit_t_lo);
  out.fit_t_hi = cfg.get_double("fit.t_hi", out.fit_t_hi);
  return out;
}

Field initial_field(const ExperimentConfig& cfg) {
  const auto& c = cfg.source;
  Grid grid(cfg.dim, cfg.n, cfg.L);
  const auto kind = lower(c.get_string("initial.kind"));
  if (kind == "gaussian") {
    return synthesize_initial(grid, GaussianSpec{c.get_double("initial.amplitude", 1.0),
                                                 c.get_double("initial.sigma", 1.0),
                                                 c.get_double("initial.chirp", 0.0)});
  }
  if (kind == "sech") {
    return synthesize_initial(grid, SechSpec{c.get_double("initial.amplitude", 1.0), c.get_double("initial.scale", 1.0),
                                             c.get_double("initial.power", 1.0)});
  }
  if (kind == "profile") {
    c.require({"initial.profile"});
    auto spec = read_profile_csv(c.get_string("initial.profile"));
    spec.scale = c.get_double("initial.scale", 1.0);
    spec.chirp = c.get_double("initial.chirp", 0.0);
    return synthesize_initial(grid, spec);
  }
  if (kind == "groundstate") {
    const auto profile = solve_stationary(cfg.model, c.get_double("initial.omega", cfg.omega), cfg.dim, cfg.radial);
    auto spec = to_profile_spec(profile, c.get_double("initial.scale", 1.0));
    spec.chirp = c.get_double("initial.chirp", 0.0);
    return synthesize_initial(grid, spec);
  }
  throw ConfigError(fmt::format("initial.kind: unknown '{}' (gaussian, sech, profile, groundstate)", kind));
}

int exit_code_for(RunStatus s) {
  switch (s) {
    case RunStatus::Completed: return 0;
    case RunStatus::BlowupDetected: return 2;
    case RunStatus::ResolutionExceeded: return 3;
  }
  return 1;
}

RunRecord run_experiment(const Config& raw) {
  const auto cfg = resolve_config(raw);
  prepare_output(cfg);
  RunRecord rec;
  rec.summary = base_summary(cfg);
  auto& summary = rec.summary;

  switch (cfg.kind) {
    case ExperimentKind::Classify: {
      const auto report = classify_regime(cfg.model, cfg.dim, cfg.mass_of_u0, cfg.cs_override);
      summary["verdict"] = to_string(report.verdict);
      summary["certificates"].push_back(regime_json(report));
      break;
    }
    case ExperimentKind::GroundState: {
      const auto profile = solve_stationary(cfg.model, cfg.omega, cfg.dim, cfg.radial);
      const auto dI = estimate_dI(cfg.model, profile);
      summary["verdict"] = "Converged";
      summary["groundstate"] = {{"omega", profile.omega},         {"iterations", profile.iterations},
                                {"residual", profile.residual},   {"d_I_estimate", dI.value},
                                {"Q_profile", dI.Q_unscaled},     {"amplitude", dI.amplitude},
                                {"dilation", dI.dilation},        {"r_max", profile.grid.r_max},
                                {"m", profile.grid.m}};
      if (cfg.output_dir) write_profile_csv(*cfg.output_dir / "profile.csv", profile);
      if (raw.has("initial.scale") && raw.has("grid.n") && raw.has("grid.L")) {
        auto gcfg = cfg;
        gcfg.n = static_cast<std::size_t>(raw.get_int("grid.n"));
        gcfg.L = raw.get_double("grid.L");
        Grid grid(cfg.dim, gcfg.n, gcfg.L);
        auto spec = to_profile_spec(profile, raw.get_double("initial.scale"));
        spec.chirp = raw.get_double("initial.chirp", 0.0);
        const auto cert = threshold_verdict(synthesize_initial(grid, spec), cfg.model, cfg.omega, dI.value);
        summary["certificates"].push_back(certificate_json(cert));
      }
      break;
    }
    case ExperimentKind::Sweep: {
      const auto rows = sweep(raw);
      json table = json::array();
      bool any_blowup = false;
      for (const auto& r : rows) {
        table.push_back({{"value", r.value},
                         {"verdict", r.status ? json(to_string(*r.status)) : json(nullptr)},
                         {"T_estimate", nullable(r.T_estimate)},
                         {"max_grad2", r.max_grad2},
                         {"error", r.error}});
        any_blowup = any_blowup || (r.status && *r.status == RunStatus::BlowupDetected);
      }
      summary["sweep"] = table;
      summary["verdict"] = any_blowup ? "Mixed" : "Completed";
      break;
    }
    case ExperimentKind::Run:
    case ExperimentKind::FitDecay:
    case ExperimentKind::FitBlowupRate:
    case ExperimentKind::VerifyIdentities: {
      const auto run = do_run(cfg);
      attach_run(summary, cfg, run);
      rec.series = run.result.series;
      rec.verdict = run.result.verdict;
      rec.exit_code = exit_code_for(run.result.verdict.status);
      if (cfg.kind == ExperimentKind::FitDecay) {
        const auto routing = route_decay_case(cfg.model, cfg.dim);
        summary["certificates"].push_back({{"kind", "decay_routing"},
                                           {"case", routing.decay_case ? json(*routing.decay_case) : json(nullptr)},
                                           {"k1", nullable(routing.k1)},
                                           {"predicted_exponent", nullable(routing.predicted_exponent)},
                                           {"audit", audit_json(routing.audit)}});
        try {
          summary["fits"].push_back(fit_json(cfg.fit_column, fit_decay(run.result.series, cfg.fit_column,
                                                                        cfg.fit_t_lo, cfg.fit_t_hi)));
        } catch (const DomainError& e) {
          summary["fits"].push_back({{"quantity", cfg.fit_column}, {"error", e.what()}});
        }
      }
      if (cfg.kind == ExperimentKind::FitBlowupRate && run.result.verdict.T_estimate) {
        const double T = *run.result.verdict.T_estimate;
        try {
          summary["fits"].push_back(fit_json("grad", fit_blowup_rate(run.result.series, T, raw.get_double("fit.t_lo", -INFINITY))));
        } catch (const DomainError& e) {
          summary["fits"].push_back({{"quantity", "grad"}, {"error", e.what()}});
        }
        summary["certificates"].push_back(
            {{"kind", "blowup_rate_conditions"},
             {"audit", audit_json(blowup_rate_conditions(cfg.model, cfg.dim, run.result.series.front(), T))}});
      }
      if (cfg.kind == ExperimentKind::VerifyIdentities) {
        const auto report = check_identities(run.result.series, raw);
        json checks = json::array();
        for (const auto& c : report.checks) {
          checks.push_back({{"identity", c.name}, {"pass", c.pass}, {"window_valid", c.window_valid},
                            {"residual", c.residual}, {"budget", c.budget}});
        }
        summary["identity_checks"] = checks;
        summary["verdict"] = report.all_pass() ? "pass" : "fail";
        rec.exit_code = report.all_pass() ? 0 : 1;
      }
      break;
    }
  }
  write_summary(cfg, summary);
  return rec;
}

std::vector<SweepRow> sweep(const Config& raw) {
  const auto cfg = resolve_config(raw);
  std::vector<double> values = cfg.sweep_values;
  std::sort(values.begin(), values.end());
  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < values.size(); ++i) {
    SweepRow row;
    row.value = values[i];
    try {
      Config c = raw;
      c.set_path(cfg.sweep_path, fmt::format("{:.17g}", values[i]));
      c.set("experiment.kind", "run");
      if (cfg.output_dir) c.set("output.dir", (*cfg.output_dir / fmt::format("row_{:.17g}", values[i])).string());
      auto rcfg = resolve_config(c);
      prepare_output(rcfg);
      const auto run = do_run(rcfg);
      row.status = run.result.verdict.status;
      row.T_estimate = run.result.verdict.T_estimate;
      for (const auto& s : run.result.series) row.max_grad2 = std::max(row.max_grad2, s.grad2);
      json summary = base_summary(rcfg);
      attach_run(summary, rcfg, run);
      write_summary(rcfg, summary);
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

bool VerifyReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const IdentityCheck& c) { return c.pass; });
}

VerifyReport verify_identities(const Config& raw) {
  Config c = raw;
  c.set("experiment.kind", "verify");
  const auto cfg = resolve_config(c);
  prepare_output(cfg);
  const auto run = do_run(cfg);
  return check_identities(run.result.series, raw);
}

VerifyReport check_identities(const std::vector<DiagnosticSample>& series, const Config& raw) {
  VerifyReport rep;
  rep.residuals = identity_residuals(series);
  const auto& r = rep.residuals;
  const bool wv = r.variance_window_valid;
  const double j_rel = raw.get_double("verify.j_budget", 1e-6);
  const double y_rel = raw.get_double("verify.y_budget", 1e-2);
  const double p_rel = raw.get_double("verify.p_budget", 1e-4);

  rep.checks.push_back({"mass", r.r_mass <= 1e-10, true, r.r_mass, 1e-10});
  rep.checks.push_back({"J' = -4y", wv && r.r_J <= j_rel * std::max(r.max_abs_y, 1e-300), wv, r.r_J,
                        j_rel * r.max_abs_y});
  rep.checks.push_back({"y' = -Q", wv && r.r_y <= y_rel * std::max(r.max_abs_Q, 1e-300), wv, r.r_y,
                        y_rel * r.max_abs_Q});
  // P' = 4tθ has a scale set by P itself
  rep.checks.push_back({"P' = 4t theta", wv && r.r_P <= p_rel * std::max(r.max_abs_P, 1e-300), wv, r.r_P,
                        p_rel * r.max_abs_P});

  // conformal-critical models: θ ≡ 0 and P constant
  double max_theta = 0.0, p_drift = 0.0, theta_scale = 0.0;
  for (const auto& s : series) {
    max_theta = std::max(max_theta, std::fabs(s.theta));
    theta_scale = std::max(theta_scale, std::fabs(s.potential) + s.gradh2);
    p_drift = std::max(p_drift, std::fabs(s.P - series.front().P) / std::fabs(series.front().P));
  }
  if (max_theta <= 1e-10 * std::max(theta_scale, 1e-300)) {
    rep.checks.push_back({"theta = 0", true, true, max_theta, 1e-10 * theta_scale});
    rep.checks.push_back({"P constant", wv && p_drift <= p_rel, wv, p_drift, p_rel});
  }
  return rep;
}

void write_series_csv(const std::filesystem::path& path, const std::vector<DiagnosticSample>& series) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
  os << "t,mass,energy,grad2,gradh2,variance,y,Q,theta,P,linf,tail,boundary_mass,dt";
  if (!series.empty()) {
    for (const auto& [p, v] : series.front().lp_norms) {
      (void)v;
      os << fmt::format(",lp_{:g}", p);
    }
  }
  os << "\n";
  for (const auto& s : series) {
    os << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},"
                      "{:.17g},{:.17g}",
                      s.t, s.mass, s.energy, s.grad2, s.gradh2, s.variance, s.y, s.Q, s.theta, s.P, s.linf, s.tail,
                      s.boundary_mass, s.dt);
    for (const auto& [p, v] : s.lp_norms) {
      (void)p;
      os << fmt::format(",{:.17g}", v);
    }
    os << "\n";
  }
}

json to_json(const DiagnosticSample& s) {
  return {{"t", s.t},         {"mass", s.mass},   {"energy", s.energy}, {"grad2", s.grad2},
          {"gradh2", s.gradh2}, {"variance", s.variance}, {"y", s.y}, {"Q", s.Q},
          {"theta", s.theta}, {"P", s.P},         {"linf", s.linf},     {"tail", s.tail},
          {"boundary_mass", s.boundary_mass}, {"dt", s.dt}, {"valid", s.valid}};
}

json to_json(const IdentityResiduals& r) {
  return {{"r_mass", r.r_mass},
          {"r_energy", r.r_energy},
          {"r_J", r.r_J},
          {"r_y", r.r_y},
          {"r_P", r.r_P},
          {"r_B", nullable(r.r_B)},
          {"variance_window_valid", r.variance_window_valid},
          {"first_invalid_t", nullable(r.first_invalid_t)}};
}

}  // namespace qnls
