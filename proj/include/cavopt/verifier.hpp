#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cavopt/coordinator.hpp"
#include "cavopt/model.hpp"
#include "cavopt/trajectory.hpp"

namespace cavopt {

/// Worst excess of one check. A check passes when value <= tol.
struct Margin {
  std::string name;
  double value = 0.0;
  double t = 0.0;  // where the worst value occurs
  double tol = 0.0;
  bool applicable = true;
  bool pass() const { return !applicable || value <= tol; }
};

struct OracleComparison {
  double analytic_J = 0.0;
  double oracle_J = 0.0;
  double rel_gap = 0.0;  // (analytic - oracle) / oracle
  bool pass() const { return rel_gap <= 0.005; }
};

struct AuditOptions {
  bool free_tf = false;          // check H(tf) = 0 on the terminal arc
  std::optional<double> v0;      // check v(t0)
  double sample_step = 1e-3;
};

struct AuditReport {
  std::string structural_error;  // non-empty when the trajectory is unusable
  std::vector<Margin> checks;
  std::vector<std::pair<double, double>> hamiltonian;  // (t, H) on unconstrained arcs
  std::optional<OracleComparison> oracle;

  bool passed() const;
  const Margin* find(const std::string& name) const;
  std::vector<std::string> failures() const;
  std::string to_text() const;
};

/// Constraint, continuity, terminal and optimality-condition audit of one
/// solved trajectory against its predecessors.
AuditReport audit(const PiecewiseTrajectory& traj, const QueueView& view,
                  const ScenarioConfig& cfg, const AuditOptions& opt = {});

// ---------------------------------------------------------------------------
// Direct transcription

struct OracleOptions {
  double dt = 0.01;
  int iterations = 10000;
  int stages = 5;  // penalty weight grows 10x per stage
  double initial_weight = 1000.0;
  std::uint64_t seed = 1;
  // Free terminal time: coarse search settings.
  double coarse_dt = 0.1;
  int coarse_iterations = 1000;
};

struct OracleResult {
  double J = 0.0;               // gamma T + sum of u^2/2 dt, penalties excluded
  double T = 0.0;               // horizon tf - t0
  double dt = 0.0;              // actual step, T / N
  std::vector<double> u;        // piecewise-constant control
  double violation = 0.0;       // worst raw constraint violation of the rollout
  bool feasible = false;        // violation within 1e-3 and terminal position met
};

/// Zero-order-hold control on a uniform grid, exact double-integrator
/// rollout, minimized by accelerated projected gradient. u is projected onto
/// its box and the terminal-position hyperplane; speed, headway and merging
/// constraints enter as quadratic penalties. Free terminal time (tf empty) is
/// searched by golden section over the horizon.
OracleResult transcription_oracle(double t0, double v0, std::optional<double> tf,
                                  const QueueView& view, const ScenarioConfig& cfg,
                                  const OracleOptions& opt = {});

/// Discrete cost of a given trajectory's control, sampled at cell midpoints
/// and held over cells of width about dt.
double oracle_evaluate(const PiecewiseTrajectory& traj, const ScenarioConfig& cfg, double dt);

}  // namespace cavopt
