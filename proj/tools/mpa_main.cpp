#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mpa/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"membership privacy analysis toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string report_dir;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int parallel = 0;

  auto* run_cmd = app.add_subcommand("run", "run an experiment config");
  run_cmd->add_option("config", config_path, "experiment config (json)")->required();
  run_cmd->add_option("--seed", seed, "master seed override")
      ->each([&](const std::string&) { seed_given = true; });
  run_cmd->add_option("--out", out_dir, "output directory override");
  run_cmd->add_option("--parallel", parallel, "kernel thread count (0 = default)");

  auto* validate_cmd = app.add_subcommand("validate", "check a config and list problems");
  validate_cmd->add_option("config", config_path, "experiment config (json)")->required();

  auto* report_cmd =
      app.add_subcommand("report", "re-render csv tables from stored records");
  report_cmd->add_option("dir", report_dir, "directory holding report.json records")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      const auto config = mpa::load_config_file(config_path);
      mpa::RunOverrides overrides;
      if (seed_given) overrides.seed = seed;
      if (!out_dir.empty()) overrides.output_dir = out_dir;
      if (parallel > 0) overrides.parallel = parallel;
      const auto result = mpa::run_experiment(config, overrides);
      std::cout << "points: " << result.points_run
                << "  failed: " << result.points_failed << "\n";
      for (const auto& e : result.errors) std::cerr << "point failed: " << e << "\n";
      std::cout << "manifest: " << result.manifest_path << "\n";
      return result.points_failed == 0 ? 0 : 3;
    }
    if (validate_cmd->parsed()) {
      const auto config = mpa::load_config_file(config_path);
      const auto problems = mpa::validate_config(config);
      if (problems.empty()) {
        std::cout << "config ok\n";
        return 0;
      }
      for (const auto& p : problems) std::cout << p << "\n";
      return 2;
    }
    if (report_cmd->parsed()) {
      mpa::render_report_tables(report_dir);
      std::cout << "tables rendered under " << report_dir << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
