// branchlab: run experiments from JSON configs, validate configs, and report
// on artifact directories.

#include "config.hpp"
#include "experiments.hpp"

#include "branchlab/parallel.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <iostream>

namespace {

using namespace branchlab::cli;

int config_error(const ConfigError& e) {
  nlohmann::json err = {{"error", "config"}, {"key", e.key()}, {"message", e.what()}};
  std::cout << err.dump() << "\n";
  return kExitConfig;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"branchlab: numerical experiments on two-valued harmonic functions"};
  app.require_subcommand(1);
  std::string config_path, report_dir;
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (overrides BRANCHLAB_THREADS)");

  auto* run = app.add_subcommand("run", "run an experiment config");
  run->add_option("config", config_path, "experiment config (JSON)")->required();
  std::string out_override;
  run->add_option("-o,--output", out_override, "output directory (overrides output_dir)");

  auto* validate = app.add_subcommand("validate", "validate an experiment config");
  validate->add_option("config", config_path, "experiment config (JSON)")->required();

  auto* report = app.add_subcommand("report", "summarize an artifact directory");
  report->add_option("dir", report_dir, "run directory or a directory of runs")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }
  if (threads > 0) branchlab::set_thread_count(threads);

  try {
    if (*validate) {
      const ExperimentConfig cfg = load_config(config_path);
      std::cout << nlohmann::json({{"valid", true}, {"kind", to_string(cfg.kind)}}).dump() << "\n";
      return kExitOk;
    }
    if (*run) {
      ExperimentConfig cfg = load_config(config_path);
      if (!out_override.empty()) cfg.output_dir = out_override;
      const int code = run_experiment(cfg);
      std::cout << cfg.output_dir.string() << "\n";
      return code;
    }
    return report_directory(report_dir, std::cout);
  } catch (const ConfigError& e) {
    return config_error(e);
  } catch (const std::exception& e) {
    std::cout << nlohmann::json({{"error", "numerical"}, {"message", e.what()}}).dump() << "\n";
    return kExitNumerical;
  }
}
