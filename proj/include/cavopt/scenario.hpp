#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cavopt/model.hpp"

namespace cavopt {

inline constexpr int kScenarioSchemaVersion = 1;

struct RunOptions {
  double sample_step = 0.05;  // output sampling [s]
  bool oracle = false;        // compare each solve against direct transcription
  std::uint64_t seed = 0;     // oracle seed
};

/// One set of arrivals solved under the shared config.
struct Variant {
  std::string name = "main";
  std::vector<VehicleArrival> arrivals;
};

struct Scenario {
  int schema_version = kScenarioSchemaVersion;
  std::string name;
  ScenarioConfig config;
  std::vector<Variant> variants;
  RunOptions run;
};

/// Strict JSON parser: unknown keys, wrong types and duplicate ids raise
/// ConfigError. Arrivals are sorted by t0 (stable).
Scenario parse_scenario(const std::string& json_text);
/// Reads and parses a file. IO failures raise ConfigError as well.
Scenario load_scenario(const std::string& path);
std::string to_json(const Scenario& s);

/// Built-in scenarios reproducing the paper's figures.
std::vector<std::string> fixture_names();
/// Throws ConfigError for an unknown name.
Scenario fixture(const std::string& name);

}  // namespace cavopt
