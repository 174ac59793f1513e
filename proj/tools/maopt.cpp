#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "maopt/cli.hpp"

namespace {

void add_common(CLI::App* cmd, maopt::cli::CommonOptions& opt, std::string& engine) {
  cmd->add_option("--config", opt.config_path, "JSON configuration file")->required();
  cmd->add_option("--output", opt.output_dir, "Directory for output files")->capture_default_str();
  cmd->add_option("--seed", opt.seed, "Override the scenario master seed");
  cmd->add_option("--engine", engine, "Gradient engine")->check(CLI::IsMember({"mc", "de"}));
  cmd->add_option("--jobs", opt.jobs, "Parallel realizations (0 = hardware threads)")->check(CLI::NonNegativeNumber);
  cmd->add_flag("-v,--verbose", opt.verbosity, "Progress messages on stderr");
}

}  // namespace

int main(int argc, char** argv) {
  using namespace maopt::cli;
  CLI::App app{"Movable-antenna position optimizer"};
  app.require_subcommand(1);

  CommonOptions opt;
  std::string engine;
  auto* optimize = app.add_subcommand("optimize", "Optimize antenna positions for one user draw");
  auto* evaluate = app.add_subcommand("evaluate", "Compare schemes over many realizations");
  auto* sweep = app.add_subcommand("sweep", "Repeat the evaluation over a parameter sweep");
  for (auto* cmd : {optimize, evaluate, sweep}) add_common(cmd, opt, engine);

  ValidateOptions vopt;
  std::string level = "quick";
  auto* validate = app.add_subcommand("validate", "Run the numerical self-checks");
  validate->add_option("--level", level, "Suite size")->check(CLI::IsMember({"quick", "full"}))->capture_default_str();
  validate->add_option("--checks", vopt.checks, "Run only these check ids (1-10)")->delimiter(',');
  validate->add_option("--seed", vopt.seed, "Seed for the random instances");
  validate->add_option("--jobs", vopt.jobs, "Parallel realizations (0 = hardware threads)")
      ->check(CLI::NonNegativeNumber);
  validate->add_option("--output", vopt.output_dir, "Also write the table to DIR/validation.txt");
  validate->add_flag("--tamper-water-fill", vopt.tamper_water_fill,
                     "Negative control: shift the water level by 1% in the KKT check");
  validate->add_flag("-v,--verbose", vopt.verbosity, "Progress messages on stderr");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : config_error;
  }

  if (!engine.empty()) opt.engine = engine == "mc" ? maopt::EngineKind::mc : maopt::EngineKind::de;
  if (*optimize) return cmd_optimize(opt, std::cout, std::cerr);
  if (*evaluate) return cmd_evaluate(opt, std::cout, std::cerr);
  if (*sweep) return cmd_sweep(opt, std::cout, std::cerr);
  vopt.level = level == "full" ? maopt::validation::Level::full : maopt::validation::Level::quick;
  return cmd_validate(vopt, std::cout, std::cerr);
}
