#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "savflow/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"savflow: energy-stable spectral solver experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  int threads = 1;
  auto* run = app.add_subcommand("run", "execute an experiment config");
  run->add_option("config", config_path, "JSON config file")->required();
  run->add_option("--out", out_dir, "override the output directory");
  run->add_option("--threads", threads, "worker threads for sweeps")
      ->check(CLI::PositiveNumber);

  std::string validate_path;
  auto* validate =
      app.add_subcommand("validate", "check a config without running it");
  validate->add_option("config", validate_path, "JSON config file")->required();

  std::string glob_pattern;
  auto* rates = app.add_subcommand("rates",
                                   "aggregate dt,error CSV files into slopes");
  rates->add_option("glob", glob_pattern, "glob of rate CSV files")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      savflow::ExperimentConfig cfg = savflow::load_config(config_path);
      if (!out_dir.empty()) cfg.out_dir = out_dir;
      savflow::ExperimentOutcome outcome =
          savflow::run_experiment(cfg, threads);
      std::cout << outcome.summary;
      return outcome.passed ? 0 : 2;
    }
    if (validate->parsed()) {
      savflow::load_config(validate_path);
      std::cout << "ok\n";
      return 0;
    }
    if (rates->parsed()) {
      std::cout << savflow::rates_report(glob_pattern);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
