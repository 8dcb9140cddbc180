#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cavopt/simulation.hpp"

using namespace cavopt;

int main(int argc, char** argv) {
  CLI::App app{"Time/energy optimal coordination of automated vehicles at a signal-free intersection"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Solve a scenario file or a built-in fixture");
  std::string path, fixture_name, out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<double> gamma, sample_step;
  bool oracle = false;
  run->add_option("scenario", path, "Scenario JSON file");
  run->add_option("--fixture", fixture_name, "Built-in scenario name");
  run->add_option("--out", out_dir, "Output directory")->capture_default_str();
  run->add_option("--seed", seed, "Seed for queue tie-breaking and the oracle");
  run->add_option("--gamma", gamma, "Override the time weight");
  run->add_flag("--oracle", oracle, "Compare each solve against direct transcription");
  run->add_option("--sample-step", sample_step, "Output sampling step [s]");

  auto* list = app.add_subcommand("fixtures", "List built-in fixtures");
  auto* show = app.add_subcommand("show", "Print a fixture as a scenario file");
  std::string show_name;
  show->add_option("name", show_name, "Fixture name")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (list->parsed()) {
      for (const auto& n : fixture_names()) std::cout << n << "\n";
      return 0;
    }
    if (show->parsed()) {
      std::cout << to_json(fixture(show_name));
      return 0;
    }
    if (path.empty() == fixture_name.empty()) {
      std::cerr << "error: give either a scenario file or --fixture\n";
      return 1;
    }
    Scenario sc = path.empty() ? fixture(fixture_name) : load_scenario(path);
    if (seed) {
      sc.config.rng_seed = *seed;
      sc.run.seed = *seed;
    }
    if (gamma) sc.config.gamma = *gamma;
    if (sample_step) sc.run.sample_step = *sample_step;
    if (oracle) sc.run.oracle = true;
    if (!(sc.run.sample_step > 0.0)) throw ConfigError("sample step must be positive");
    sc.config.validate();

    const SimulationResult r = simulate(sc);
    write_outputs(r, sc, out_dir);
    for (const auto& v : r.variants) {
      for (const auto& cav : v.vehicles) {
        std::printf("[%s] cav %d: %s", v.name.c_str(), cav.arrival.id, to_string(cav.status));
        if (cav.status == VehicleStatus::Solved)
          std::printf(" tf=%.4f J=%.6f %s (%.1f ms)%s", cav.traj.tf(), cav.report.cost.J,
                      cav.report.structure.c_str(), 1e3 * cav.solve_seconds,
                      cav.audit.passed() ? "" : " AUDIT FAIL");
        else
          std::printf(" - %s", cav.message.c_str());
        std::printf("\n");
      }
    }
    std::printf("outputs written to %s\n", out_dir.c_str());
    return r.exit_code();
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
