// Experiment runner CLI: run a JSON scenario config or one of the built-in
// presets, writing CSV outputs, a hashed manifest and an acceptance report.
//
// Exit codes: 0 all checks pass, 1 check failure, 2 usage/config error,
//             3 solver failure.

#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "bdlab/experiment.hpp"
#include "bdlab/presets.hpp"

namespace {

std::filesystem::path resolve_outdir(const std::string& out_flag, const std::string& run_name) {
  std::filesystem::path dir;
  if (!out_flag.empty())
    dir = out_flag;
  else
    dir = "out";
  if (dir.is_relative()) {
    if (const char* root = std::getenv("BDLAB_OUTPUT_ROOT")) dir = std::filesystem::path(root) / dir;
  }
  return dir / run_name;
}

int finish(const bdlab::RunOutcome& out, const std::filesystem::path& dir) {
  for (const auto& c : out.checks) {
    std::cout << (c.pass ? "[PASS] " : "[FAIL] ") << out.config.name << "/" << c.name << ": "
              << bdlab::format_double(c.measured) << " " << c.comparator << " "
              << bdlab::format_double(c.threshold);
    if (!c.detail.empty()) std::cout << "  (" << c.detail << ")";
    std::cout << "\n";
  }
  if (out.solver_failed) {
    std::cerr << "solver failure: " << out.failure_message << "\n";
    std::cerr << "partial outputs in " << dir << "\n";
    return 3;
  }
  std::cout << "outputs in " << dir << "\n";
  return out.all_checks_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical laboratory for the polarization Becker-Doring system"};
  app.require_subcommand(1);

  std::string config_path, preset_name, out_flag;

  auto* run = app.add_subcommand("run", "run a JSON experiment config");
  run->add_option("config", config_path, "path to the config file")->required();
  run->add_option("--out", out_flag, "output root directory (default ./out)");

  auto* pre = app.add_subcommand("preset", "run a named built-in scenario");
  pre->add_option("name", preset_name, "preset name (see list-presets)")->required();
  pre->add_option("--out", out_flag, "output root directory (default ./out)");

  auto* lst = app.add_subcommand("list-presets", "list the built-in scenarios");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (lst->parsed()) {
      for (const auto& [name, desc] : bdlab::preset_descriptions())
        std::cout << name << "\n    " << desc << "\n";
      return 0;
    }
    bdlab::ExperimentConfig cfg;
    if (run->parsed())
      cfg = bdlab::load_config(config_path);
    else
      cfg = bdlab::preset_config(preset_name);
    const auto dir = resolve_outdir(out_flag, cfg.name);
    std::filesystem::create_directories(dir);
    auto outcome = bdlab::run_experiment(cfg, dir);
    return finish(outcome, dir);
  } catch (const bdlab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
