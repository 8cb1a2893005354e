#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "homeoscale/cli.h"
#include "homeoscale/config.h"

namespace {

void add_run_options(CLI::App* cmd, homeoscale::RunArgs& args, std::uint64_t& seed) {
  cmd->add_option("config", args.configs, "config files, merged left to right");
  cmd->add_option("--set", args.sets, "override one key, e.g. --set agc.v_g=1.5");
  cmd->add_option("--out", args.out_dir, "output directory")->required();
  cmd->add_option("--seed", seed, "base seed (default: $HOMEOSCALE_SEED, else 0)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Event-driven simulator of a bang-bang homeostatic gain control loop"};
  app.require_subcommand(1);
  app.footer("Configuration keys ([section] key = default):\n" + homeoscale::config_help());

  homeoscale::RunArgs run_args;
  std::uint64_t run_seed = 0;
  auto* run = app.add_subcommand("run", "simulate one experiment");
  add_run_options(run, run_args, run_seed);

  homeoscale::SweepArgs sweep_args;
  std::uint64_t sweep_seed = 0;
  auto* sweep = app.add_subcommand("sweep", "run one experiment per value of a numeric key");
  add_run_options(sweep, sweep_args.base, sweep_seed);
  sweep->add_option("--param", sweep_args.param, "key to sweep")->required();
  sweep->add_option("--values", sweep_args.values, "values, comma separated")
      ->delimiter(',')
      ->required();
  sweep->add_option("--jobs", sweep_args.jobs, "concurrent runs")->check(CLI::PositiveNumber);

  homeoscale::CalibrateArgs cal_args;
  auto* calibrate = app.add_subcommand("calibrate", "fit leakage anchors into a config section");
  calibrate->add_option("anchors", cal_args.anchor_file, "CSV: v_g, slope_up, slope_down")
      ->required();
  calibrate->add_option("--out", cal_args.out_path, "output config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : homeoscale::kExitValidation;
  }

  if (*run) {
    if (run->count("--seed")) run_args.seed = run_seed;
    return homeoscale::cmd_run(run_args, std::cout, std::cerr);
  }
  if (*sweep) {
    if (sweep->count("--seed")) sweep_args.base.seed = sweep_seed;
    return homeoscale::cmd_sweep(sweep_args, std::cout, std::cerr);
  }
  return homeoscale::cmd_calibrate(cal_args, std::cout, std::cerr);
}
