#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "feedergen/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Synthetic radial distribution feeder generator"};

  std::string config_path;
  std::string substation_filter;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;

  app.add_option("--config", config_path, "Pipeline config file (key = value)")
      ->required()
      ->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Override the config RNG seed")
      ->each([&](const std::string&) { seed_set = true; });
  app.add_option("--substation", substation_filter, "Generate only this substation id");
  app.add_option("--out", out_dir, "Override the output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    std::filesystem::path cfg_file(config_path);
    auto cfg = feedergen::parse_pipeline_config(feedergen::detail::read_file(cfg_file),
                                                cfg_file.parent_path());
    if (seed_set) cfg.load.rng_seed = seed;
    if (!out_dir.empty()) cfg.out_dir = out_dir;

    auto report = feedergen::run_pipeline(cfg, substation_filter);
    if (report.feeders.empty()) {
      std::cerr << "warning: no substations with positive net real power; nothing generated\n";
    }
    for (const auto& f : report.feeders) {
      if (f.ok) {
        std::cout << f.substation_id << ": ok, " << f.summary.node_count << " nodes, min v "
                  << f.summary.min_v_pu << " pu, " << f.summary.prune_iterations
                  << " prune iteration(s)\n";
      } else {
        std::cerr << f.substation_id << ": error: " << f.error << "\n";
      }
    }
    return report.all_ok() ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
