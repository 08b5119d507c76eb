#pragma once

#include <cmath>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qnls/config.hpp"
#include "qnls/diagnostics.hpp"
#include "qnls/groundstate.hpp"
#include "qnls/solver.hpp"

namespace qnls {

enum class ExperimentKind { Run, Sweep, Classify, GroundState, FitDecay, FitBlowupRate, VerifyIdentities };
std::string to_string(ExperimentKind k);
ExperimentKind parse_experiment_kind(const std::string& s);

struct ExperimentConfig {
  Config source;
  ExperimentKind kind = ExperimentKind::Run;
  NonlinearityModel model;
  std::optional<double> cs_override;
  std::optional<double> mass_of_u0;
  int dim = 1;
  std::size_t n = 0;
  double L = 0.0;
  SolverConfig solver;
  IntegrateOptions integrate;
  std::optional<std::filesystem::path> output_dir;
  // groundstate block
  double omega = 1.0;
  RadialConfig radial;
  // sweep block
  std::string sweep_path;
  std::vector<double> sweep_values;
  // fit block
  std::string fit_column = "gradh2";
  double fit_t_lo = 2.0;
  double fit_t_hi = INFINITY;
};

/// Validates keys for the requested kind; every missing key is listed.
ExperimentConfig resolve_config(const Config& cfg);

/// Builds u0 from the initial.* block (gaussian | sech | profile | groundstate).
Field initial_field(const ExperimentConfig& cfg);

struct RunRecord {
  nlohmann::json summary;
  int exit_code = 0;
  std::vector<DiagnosticSample> series;
  std::optional<BlowupVerdict> verdict;
};

int exit_code_for(RunStatus s);

RunRecord run_experiment(const Config& cfg);

struct SweepRow {
  double value = 0.0;
  std::optional<RunStatus> status;
  std::optional<double> T_estimate;
  double max_grad2 = 0.0;
  std::string error;
};

std::vector<SweepRow> sweep(const Config& cfg);

struct IdentityCheck {
  std::string name;
  bool pass = false;
  bool window_valid = true;
  double residual = 0.0;
  double budget = 0.0;
};

struct VerifyReport {
  IdentityResiduals residuals;
  std::vector<IdentityCheck> checks;
  bool all_pass() const;
};

VerifyReport verify_identities(const Config& cfg);
/// Budget checks on an existing uniformly sampled series (verify.* keys).
VerifyReport check_identities(const std::vector<DiagnosticSample>& series, const Config& cfg);

void write_series_csv(const std::filesystem::path& path, const std::vector<DiagnosticSample>& series);

nlohmann::json to_json(const DiagnosticSample& s);
nlohmann::json to_json(const IdentityResiduals& r);

}  // namespace qnls
