#include "qnls/solver.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/core.h>

#include "qnls/error.hpp"

namespace qnls {

double SolverConfig::resolved_dt_min() const { return dt_min.value_or(dt0 * std::ldexp(1.0, -20)); }

void SolverConfig::validate() const {
  const double lo = resolved_dt_min();
  if (!(dt0 > 0.0) || !std::isfinite(dt0)) throw ConfigError("time.dt0 must be finite and > 0");
  if (!(lo > 0.0) || lo > dt0) throw ConfigError("time.dt_min must satisfy 0 < dt_min <= dt0");
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw ConfigError("time.t_end must be finite and >= 0");
  if (!(tail_max > 0.0 && tail_max < 1.0)) throw ConfigError("detect.tail_max must lie in (0, 1)");
  if (!(grad_blowup_factor > 1.0)) throw ConfigError("detect.grad_factor must exceed 1");
}

std::string to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Completed: return "Completed";
    case RunStatus::BlowupDetected: return "BlowupDetected";
    case RunStatus::ResolutionExceeded: return "ResolutionExceeded";
  }
  return "?";
}

Field linear_half_step(const Field& f, double tau) {
  if (tau == 0.0) return f;
  const auto& g = f.grid();
  std::vector<complex> w(f.values().begin(), f.values().end());
  g.forward(w);
  const auto k2 = g.k_squared();
  for (std::size_t i = 0; i < w.size(); ++i) w[i] *= std::polar(1.0, k2[i] * tau);
  g.inverse(w);
  return Field(g, std::move(w));
}

Field nonlinear_phase_step(const Field& f, const NonlinearityModel& model, double tau) {
  if (tau == 0.0) return f;
  const auto& g = f.grid();
  const auto u = f.values();
  const std::size_t size = u.size();
  std::vector<double> rho(size), h(size), dh(size), F(size);
  for (std::size_t i = 0; i < size; ++i) {
    rho[i] = std::norm(u[i]);
    try {
      const auto nv = eval_nonlinearity(model, rho[i]);
      h[i] = nv.h;
      dh[i] = nv.dh;
      F[i] = nv.F;
    } catch (const OverflowError& e) {
      throw OverflowError(fmt::format("{} (at |u|^2 = {})", e.what(), rho[i]));
    }
  }
  std::vector<double> lap;
  if (model.h_kind != HKind::Zero) lap = spectral_laplacian(g, h);
  std::vector<complex> out(size);
  for (std::size_t i = 0; i < size; ++i) {
    const double phase = (lap.empty() ? 0.0 : 2.0 * dh[i] * lap[i]) + F[i];
    out[i] = u[i] * std::polar(1.0, -tau * phase);
  }
  return Field(g, std::move(out));
}

StepperState strang_step(const StepperState& state, const NonlinearityModel& model, double tau) {
  auto f = linear_half_step(state.field, 0.5 * tau);
  f = nonlinear_phase_step(f, model, tau);
  f = linear_half_step(f, 0.5 * tau);
  return {state.t + tau, std::move(f), state.dt, state.steps + 1};
}

// -------------------------------------------------------------------- detector

std::optional<double> estimate_blowup_time(const std::vector<DiagnosticSample>& series) {
  if (series.size() < 2) return std::nullopt;
  const double g_last = std::sqrt(series.back().grad2);
  std::size_t first = series.size() - 1;
  while (first > 0 && std::sqrt(series[first - 1].grad2) >= 0.1 * g_last) --first;
  // at least four points when the series allows it
  if (series.size() - first < 4) first = series.size() >= 4 ? series.size() - 4 : 0;

  double st = 0, sv = 0, stt = 0, stv = 0;
  const double n = static_cast<double>(series.size() - first);
  for (std::size_t i = first; i < series.size(); ++i) {
    const double t = series[i].t;
    const double v = 1.0 / std::sqrt(series[i].grad2);
    st += t;
    sv += v;
    stt += t * t;
    stv += t * v;
  }
  const double denom = n * stt - st * st;
  if (!(denom > 0.0)) return std::nullopt;
  const double slope = (n * stv - st * sv) / denom;
  const double intercept = (sv - slope * st) / n;
  if (!(slope < 0.0)) return std::nullopt;
  return -intercept / slope;
}

BlowupVerdict detect_blowup(const std::vector<DiagnosticSample>& series, const SolverConfig& cfg,
                            bool resolution_lost) {
  if (series.size() < 4) {
    throw DomainError(fmt::format("blowup detection needs >= 4 samples (got {})", series.size()));
  }
  const double g0 = std::sqrt(series.front().grad2);
  double g_max = 0.0;
  for (const auto& s : series) g_max = std::max(g_max, std::sqrt(s.grad2));
  const auto& last = series.back();
  const double g_last = std::sqrt(last.grad2);
  const bool tail_fired = resolution_lost || !(last.tail <= cfg.tail_max);

  BlowupVerdict v;
  std::string why;
  if (g_last > cfg.grad_blowup_factor * g0) {
    why = fmt::format("||grad u|| grew by {:.3g} (> {:.3g})", g_last / g0, cfg.grad_blowup_factor);
  } else if (tail_fired && g_max >= cfg.min_growth * g0) {
    why = fmt::format("resolution lost at t={:.6g} after ||grad u|| grew by {:.3g}", last.t, g_max / g0);
  } else if (tail_fired) {
    v.status = RunStatus::ResolutionExceeded;
    v.reason = fmt::format("spectral tail {:.3g} exceeded {:.3g} without gradient growth", last.tail, cfg.tail_max);
    return v;
  } else {
    v.status = RunStatus::Completed;
    v.reason = "reached t_end";
    return v;
  }

  v.status = RunStatus::BlowupDetected;
  auto T = estimate_blowup_time(series);
  if (!T || !(*T > last.t)) {
    // fall back to the local secant of 1/||∇u|| through the last two samples
    const auto& prev = series[series.size() - 2];
    const double a = 1.0 / std::sqrt(prev.grad2), b = 1.0 / g_last;
    const double rate = (b - a) / (last.t - prev.t);
    T = rate < 0.0 ? last.t - b / rate : last.t + (last.t - prev.t);
    why += "; T from local secant";
  }
  v.T_estimate = T;
  v.reason = why;
  return v;
}

// ------------------------------------------------------------------ integrate

namespace {

struct EnergyProbe {
  double energy = 0.0;
  double scale = 0.0;  // grad2 + gradh2 + |∫G|
  double grad2 = 0.0;
};

EnergyProbe probe_energy(const Field& f, const NonlinearityModel& model) {
  const auto& g = f.grid();
  EnergyProbe p;
  p.grad2 = gradient_norm_sq(f);
  double gradh2 = 0.0, potential = 0.0;
  std::vector<double> h(f.size());
  const auto u = f.values();
  for (std::size_t i = 0; i < u.size(); ++i) {
    const auto nv = eval_nonlinearity(model, std::norm(u[i]));
    h[i] = nv.h;
    potential += nv.G;
  }
  potential *= g.cell_volume();
  if (model.h_kind != HKind::Zero) gradh2 = gradient_norm_sq(g, h);
  p.energy = 0.5 * (p.grad2 + gradh2 - potential);
  p.scale = p.grad2 + gradh2 + std::fabs(potential);
  return p;
}

}  // namespace

IntegrationResult integrate(const Field& u0, const NonlinearityModel& model, const SolverConfig& cfg,
                            const IntegrateOptions& opts) {
  cfg.validate();
  const std::size_t every = std::max<std::size_t>(1, opts.sample_every);
  const double dt_min = cfg.resolved_dt_min();

  std::vector<DiagnosticSample> series;
  BlowupVerdict verdict;
  StepperState state{0.0, u0, cfg.dt0, 0};
  if (!cfg.adapt && cfg.t_end > 0.0) {
    // uniform steps that land exactly on t_end
    state.dt = cfg.t_end / std::ceil(cfg.t_end / cfg.dt0 - 1e-9);
  }

  auto record = [&](const StepperState& s) {
    auto d = sample(s.field, model, s.t, opts.lp_list);
    d.dt = s.dt;
    series.push_back(std::move(d));
  };
  record(state);
  const double g0 = std::sqrt(series.front().grad2);

  bool resolution_lost = false;
  bool sampled_last = true;
  std::string stop_note;
  EnergyProbe current;
  if (cfg.adapt) current = probe_energy(state.field, model);

  while (state.t < cfg.t_end * (1.0 - 1e-14)) {
    const double remaining = cfg.t_end - state.t;
    const double tau = cfg.adapt ? std::min(state.dt, remaining) : state.dt;
    std::optional<StepperState> trial;
    bool ok = true;
    try {
      trial = strang_step(state, model, tau);
      ok = trial->field.all_finite();
    } catch (const OverflowError& e) {
      ok = false;
      stop_note = e.what();
    }

    double grad2 = 0.0;
    if (cfg.adapt) {
      EnergyProbe next;
      double tail = 1.0, jump = INFINITY;
      if (ok) {
        try {
          next = probe_energy(trial->field, model);
          tail = spectral_tail_fraction(trial->field);
          jump = std::fabs(next.energy - current.energy) / std::max(current.scale, 1e-300);
        } catch (const OverflowError& e) {
          stop_note = e.what();
        }
      }
      const bool reject = !ok || !(tail <= cfg.tail_max) || !(jump <= cfg.energy_jump_max);
      if (reject) {
        if (state.dt * 0.5 < dt_min) {
          resolution_lost = true;
          if (stop_note.empty()) {
            stop_note = fmt::format("dt reached dt_min at t={:.6g} (tail {:.3g}, energy jump {:.3g})",
                                    state.t, tail, jump);
          }
          break;
        }
        state.dt *= 0.5;
        continue;
      }
      trial->dt = state.dt;
      if (tail < 0.1 * cfg.tail_max && jump < 0.1 * cfg.energy_jump_max) {
        trial->dt = std::min(2.0 * state.dt, cfg.dt0);
      }
      current = next;
      grad2 = next.grad2;
    } else {
      if (!ok) {
        resolution_lost = true;
        if (stop_note.empty()) stop_note = fmt::format("non-finite field at t={:.6g}", state.t + tau);
        break;
      }
      grad2 = gradient_norm_sq(trial->field);
    }

    // land exactly on t_end to keep sample times clean
    if (!cfg.adapt && std::fabs(trial->t - cfg.t_end) < 1e-9 * std::max(1.0, cfg.t_end)) trial->t = cfg.t_end;
    state = std::move(*trial);
    sampled_last = false;
    if (state.steps % every == 0) {
      record(state);
      sampled_last = true;
    }
    if (opts.checkpoint_every && opts.on_checkpoint && state.steps % opts.checkpoint_every == 0) {
      opts.on_checkpoint(state);
    }
    if (std::sqrt(grad2) > cfg.grad_blowup_factor * g0) break;
  }
  if (!sampled_last) record(state);

  if (series.size() >= 4) {
    verdict = detect_blowup(series, cfg, resolution_lost);
  } else if (resolution_lost) {
    verdict = {RunStatus::ResolutionExceeded, std::nullopt, "resolution lost before enough samples"};
  } else {
    verdict = {RunStatus::Completed, std::nullopt, "reached t_end"};
  }
  if (!stop_note.empty()) verdict.reason += "; " + stop_note;
  return {std::move(series), std::move(verdict), std::move(state)};
}

}  // namespace qnls
