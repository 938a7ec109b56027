#include <CLI11.hpp>
#include <iostream>
#include <string>

#include "g2d2/config.hpp"
#include "g2d2/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Gradient-guided discrete diffusion for linear inverse problems"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  int workers = 0;
  std::uint64_t seed_offset = 0;
  CLI::App* run = app.add_subcommand("run", "run the experiment in a config file");
  run->add_option("config", config_path, "key = value config file")->required();
  run->add_option("--out", out_path, "override the CSV output path");
  run->add_option("--workers", workers,
                  "worker threads (default: G2D2_WORKERS, then hardware)");
  run->add_option("--seed-offset", seed_offset, "added to every seed in the list");

  std::string subcommand;
  CLI::App* verify = app.add_subcommand(
      "verify", "run a built-in verification suite and exit nonzero on failure");
  verify
      ->add_option("suite", subcommand,
                   "theorem1 | lemma_marginal | lemma_decomp | gradients | schedule")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const g2d2::ExperimentConfig cfg =
          g2d2::ExperimentConfig::from_config(g2d2::KeyValueConfig::parse_file(config_path));
      g2d2::RunOptions opts;
      opts.workers = workers;
      opts.seed_offset = seed_offset;
      opts.out_override = out_path;
      g2d2::run_experiment(cfg, opts, std::cout);
      return 0;
    }
    return g2d2::run_verify(subcommand, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
