// Experiment harness: investigation, stego grid, watermark grid, fixtures.

#include <iostream>

#include <CLI11.hpp>

#include "stegomark/harness.hpp"

using namespace stegomark;

int main(int argc, char** argv) {
  CLI::App app{"experiment harness"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "experiment config JSON")->required();
    cmd->add_option("--out", out_dir, "output directory (overrides config)");
  };
  auto* investigate = app.add_subcommand(
      "investigate", "inconsistency rates across generation lengths");
  add_common(investigate);
  auto* stego_cmd =
      app.add_subcommand("stego", "filter x codec x top-k embedding grid");
  add_common(stego_cmd);
  auto* wm_cmd =
      app.add_subcommand("watermark", "scheme x rollback x attack grid");
  add_common(wm_cmd);

  auto* fixtures_cmd =
      app.add_subcommand("fixtures", "materialize fixture files");
  std::string fixture_dir;
  fixtures_cmd->add_option("--out", fixture_dir, "target directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*fixtures_cmd) {
      write_fixture_set(fixture_dir);
      std::cout << "fixtures written to " << fixture_dir << "\n";
      return 0;
    }
    ExperimentConfig cfg = ExperimentConfig::from_file(config_path);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (cfg.out_dir.empty())
      throw std::invalid_argument("no output directory configured");

    Report report;
    if (*investigate)
      report = run_investigation(cfg);
    else if (*stego_cmd)
      report = run_stego_bench(cfg);
    else
      report = run_wm_bench(cfg);
    report.write_files(cfg.out_dir);
    std::cout << report.experiment << " finished in " << report.runtime_seconds
              << "s -> " << cfg.out_dir.string() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
