#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cavopt/coordinator.hpp"
#include "cavopt/scenario.hpp"
#include "cavopt/solver.hpp"
#include "cavopt/verifier.hpp"

namespace cavopt {

enum class VehicleStatus { Solved, Infeasible, Skipped };
const char* to_string(VehicleStatus s);

struct VehicleOutcome {
  VehicleArrival arrival;
  int queue_index = 0;
  VehicleStatus status = VehicleStatus::Skipped;
  std::string message;
  SolveReport report;
  PiecewiseTrajectory traj;  // empty unless solved
  AuditReport audit;
  double solve_seconds = 0.0;
};

struct VariantOutcome {
  std::string name;
  std::vector<VehicleOutcome> vehicles;  // queue order
  GuaranteeReport guarantees;
  bool all_solved() const;
  bool audits_passed() const;
};

struct SimulationResult {
  std::vector<VariantOutcome> variants;
  /// 0 when every vehicle solved and every audit passed, 2 otherwise.
  int exit_code() const;
};

/// Solves every variant in queue order. Vehicles whose predecessors failed
/// are skipped.
SimulationResult simulate(const Scenario& scenario);

std::string summary_csv(const SimulationResult& r);
/// Samples at `step` plus every arc junction and the exit time.
std::string trajectories_csv(const VariantOutcome& v, double step);
std::string audit_text(const SimulationResult& r);

/// Writes summary.csv, audit.txt and trajectories.csv into dir (created if
/// missing). Extra variants go to trajectories_<variant>.csv.
void write_outputs(const SimulationResult& r, const Scenario& s, const std::string& dir);

}  // namespace cavopt
