#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cavopt {

// Error taxonomy shared by all modules.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};
struct StructureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A (road, movement) key into the conflict matrix.
struct Approach {
  std::string road;
  std::string movement;

  auto operator<=>(const Approach&) const = default;
  std::string label() const { return road + "/" + movement; }
};

/// Symmetric boolean relation over approaches. Two approaches conflict when
/// vehicles on them can collide laterally inside the merging zone.
class ConflictMatrix {
 public:
  ConflictMatrix() = default;

  /// Four approaches on two perpendicular roads, through movements only:
  /// NS/southbound, NS/northbound, EW/eastbound, EW/westbound. Perpendicular
  /// roads conflict; same and opposite directions of one road do not.
  static ConflictMatrix four_way_through();

  void add_approach(const Approach& a);
  void set(const Approach& a, const Approach& b, bool conflicts);

  bool knows(const Approach& a) const { return index_.count(a) != 0; }
  /// Throws ConfigError for an unknown approach.
  bool conflicts(const Approach& a, const Approach& b) const;

  const std::vector<Approach>& approaches() const { return keys_; }

 private:
  std::size_t index_of(const Approach& a) const;

  std::vector<Approach> keys_;
  std::map<Approach, std::size_t> index_;
  std::vector<std::vector<bool>> table_;
};

/// Intersection geometry, global limits and weights.
struct ScenarioConfig {
  double L = 370.0;  // control zone segment length [m]
  double S = 30.0;   // merging zone side [m]
  double v_min = 0.0;
  double v_max = 20.0;
  double u_min = -3.0;
  double u_max = 3.0;
  double gamma = 0.1;  // time weight relative to energy
  double phi = 1.0;    // reaction time [s]
  double delta0 = 0.0; // standstill gap [m]
  ConflictMatrix conflict = ConflictMatrix::four_way_through();
  std::uint64_t rng_seed = 0;

  double travel_distance() const { return L + S; }

  /// Throws ConfigError naming the first violated invariant.
  void validate() const;
};

struct VehicleArrival {
  int id = 0;
  double t0 = 0.0;
  double v0 = 0.0;
  std::string road = "NS";
  int lane = 0;
  std::string movement = "southbound";
  // Per-vehicle acceleration limits; fall back to the scenario values.
  std::optional<double> u_min;
  std::optional<double> u_max;
  // Scripted terminal time, used to reproduce prescribed exit schedules.
  std::optional<double> tf_fixed;

  Approach approach() const { return {road, movement}; }

  /// Entry speed strictly inside the speed bounds; finite entry time.
  void validate(const ScenarioConfig& cfg) const;
};

/// Config with the vehicle's acceleration overrides applied.
ScenarioConfig effective_config(const ScenarioConfig& cfg, const VehicleArrival& a);

}  // namespace cavopt
