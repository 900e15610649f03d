// Command-line front end: simulate, sweep, analyze, sense-curves.

#include <CLI11.hpp>

#include "mimasim/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Multichannel CSMA spectrum-sharing simulator and analysis checks"};
  app.require_subcommand(1, 1);

  mimasim::cli::Manifest m;
  std::string config_path, preset, event_log;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "YAML config file");
    sub->add_option("--preset", preset, "built-in preset (fig6a..fig7c, single_su, sense, analyze)");
    sub->add_option("--out", m.out_dir, "output directory (created if absent)");
    sub->add_option("--override", m.overrides, "KEY=VALUE with a dotted key path; repeatable")->take_all();
    sub->add_option("--jobs", m.jobs, "worker threads")->check(CLI::PositiveNumber);
  };
  auto* simulate = app.add_subcommand("simulate", "run one scenario");
  add_common(simulate);
  simulate->add_option("--event-log", event_log, "write state changes of replication 0 to this file");
  add_common(app.add_subcommand("sweep", "run a parameter sweep"));
  add_common(app.add_subcommand("analyze", "verify the analytical results numerically"));
  add_common(app.add_subcommand("sense-curves", "energy-detector false-alarm and miss curves"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : mimasim::cli::kValidationFailure;
  }

  m.command = app.get_subcommands().front()->get_name();
  if (!config_path.empty()) m.config_path = config_path;
  if (!preset.empty()) m.preset = preset;
  if (!event_log.empty()) m.event_log = event_log;
  return mimasim::cli::run_command(m);
}
