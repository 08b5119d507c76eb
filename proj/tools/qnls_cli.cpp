// qnls: command-line front end for the experiment harness.
//
//   qnls run --config run.ini --out out/ --override time.t_end=2
//
// The subcommand picks experiment.kind; everything else comes from the
// config file and the overrides (applied in order, last wins).

#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "qnls/config.hpp"
#include "qnls/error.hpp"
#include "qnls/experiment.hpp"

namespace {

struct Options {
  std::string config;
  std::string out;
  std::vector<std::string> overrides;
  std::string fit_mode = "decay";
  bool quiet = false;
};

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--config,-c", o.config, "INI experiment config")->required()->check(CLI::ExistingFile);
  sub->add_option("--out,-o", o.out, "output directory (sets output.dir)");
  sub->add_option("--override,-s", o.overrides, "key=value, repeatable")->take_all();
  sub->add_flag("--quiet,-q", o.quiet, "do not print the summary JSON");
}

int execute(const std::string& command, const Options& o) {
  auto cfg = qnls::Config::load(o.config);
  for (const auto& ov : o.overrides) cfg.apply_override(ov);
  if (!o.out.empty()) cfg.set("output.dir", o.out);

  std::string kind = command;
  if (command == "fit") {
    if (o.fit_mode == "decay") {
      kind = "fit_decay";
    } else if (o.fit_mode == "blowup") {
      kind = "fit_blowup_rate";
    } else {
      throw qnls::ConfigError(fmt::format("--mode must be decay or blowup, got '{}'", o.fit_mode));
    }
  }
  cfg.set("experiment.kind", kind);

  const auto rec = qnls::run_experiment(cfg);
  if (!o.quiet) std::cout << rec.summary.dump(2) << "\n";
  return rec.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pseudospectral quasilinear Schroedinger lab"};
  app.require_subcommand(1);
  Options opts;

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"run", "integrate one configuration"},
      {"sweep", "one run per value of sweep.path"},
      {"classify", "regime classification of the model"},
      {"groundstate", "radial ground state and threshold level"},
      {"fit", "run, then fit a power law (decay or blowup rate)"},
      {"verify", "run with uniform sampling and check the identities"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    add_common(sub, opts);
    if (name == "fit") sub->add_option("--mode", opts.fit_mode, "decay | blowup")->capture_default_str();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  const auto* chosen = app.get_subcommands().front();
  try {
    return execute(chosen->get_name(), opts);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
