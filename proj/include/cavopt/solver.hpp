#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "cavopt/bounds.hpp"
#include "cavopt/coordinator.hpp"
#include "cavopt/model.hpp"
#include "cavopt/trajectory.hpp"

namespace cavopt {

// ---------------------------------------------------------------------------
// Terminal modes

struct FreeTime {};
struct FixedTime {
  double tf;
};
/// Exit exactly one headway behind a leader that exits at tk_f with speed vk_f.
struct FollowerTime {
  double tk_f;
  double vk_f;
};
using TerminalMode = std::variant<FreeTime, FixedTime, FollowerTime>;

std::string describe(const TerminalMode& m);

// ---------------------------------------------------------------------------
// Results

struct UnconstrainedParams {
  double a = 0.0, b = 0.0, c = 0.0, d = 0.0;
  double tf = 0.0;
};

/// Multipliers recovered from a solution. lambda_v(t) = -(a t + b) on
/// unconstrained arcs.
struct MultiplierRecord {
  double lambda_p = 0.0;
  std::optional<double> eta;   // follower exit multiplier
  std::optional<double> zeta;  // interior-point multiplier
  std::vector<double> pi;      // entry jumps of lambda_p per constrained arc
  double lambda_v(double t, double a, double b) const { return -(a * t + b); }
};

struct UnconstrainedSolution {
  UnconstrainedParams params;
  PiecewiseTrajectory traj;
  double residual = 0.0;
  int iterations = 0;
  std::optional<double> eta;
};

struct SafetyArcParams {
  // Follower-side polynomial coefficients of the first tracking piece.
  double a_k = 0.0, b_k = 0.0, c_k = 0.0, d_k = 0.0;
  double c_e1 = 0.0;
  std::optional<double> c_e2;  // amplitude after the leader's exit
  double tau = 0.0;            // entry
  std::optional<double> tau2;  // exit
  UnconstrainedParams pre;     // a, b, c, d before entry
  std::optional<UnconstrainedParams> post;  // e, r, q, m after exit
};

struct SafetySolution {
  SafetyArcParams params;
  PiecewiseTrajectory traj;
  Cost cost;
  double residual = 0.0;
  bool extension = false;  // exit after the leader left the merging zone
};

struct LateralSolution {
  UnconstrainedParams cz;  // before entering the merging zone
  UnconstrainedParams mz;  // inside the merging zone (e, r, q, m)
  double t_m = 0.0;
  double zeta = 0.0;
  std::optional<double> eta;
  PiecewiseTrajectory traj;
  double residual = 0.0;
  int iterations = 0;
};

struct SaturationSolution {
  PiecewiseTrajectory traj;
  std::optional<double> tau1;  // end of the saturated-control arc
  std::optional<double> tau2;  // start of the cruise arc
  bool upper = true;           // u_max/v_max (false: mirrored u_min/v_min)
  bool collapsed = false;      // bang-cruise at tf = t_L
  double residual = 0.0;
  bool extension = false;
};

// ---------------------------------------------------------------------------
// Unconstrained problems

/// Free terminal time. Throws SolverError if no root satisfies Lemma 1.
UnconstrainedSolution solve_p0_free(double t0, double v0, const ScenarioConfig& cfg);

/// Fixed terminal time via the 4x4 linear system.
UnconstrainedSolution solve_p1_fixed(double t0, double v0, double tf, const ScenarioConfig& cfg);

/// Exit one headway behind the leader's exit.
UnconstrainedSolution solve_p1_follower(double t0, double v0, const PiecewiseTrajectory& leader,
                                        const ScenarioConfig& cfg);

/// Dispatches on the terminal mode.
UnconstrainedSolution solve_unconstrained(double t0, double v0, const TerminalMode& mode,
                                          const ScenarioConfig& cfg);

/// Cubic from state (ts, ps, vs) to p = L+S under a terminal mode.
struct TerminalCubic {
  double alpha = 0.0;  // u(t) = beta + alpha (t - ts)
  double beta = 0.0;
  double T = 0.0;      // duration
  std::optional<double> eta;
  ArcSegment arc(double ts, double ps, double vs) const;
  double energy() const;
};
std::optional<TerminalCubic> terminal_cubic(double ts, double ps, double vs,
                                            const TerminalMode& mode, const ScenarioConfig& cfg);

/// Residual of the 4x4 fixed-time linear system, evaluated in extended precision.
double p1_linear_residual(double t0, double v0, double tf, const UnconstrainedParams& p,
                          double D);

// ---------------------------------------------------------------------------
// Constrained arcs

/// Arcs that ride p_i + phi v_i + delta0 = p_k on [t_from, t_to], starting
/// from speed v_from. Split at the leader's junctions.
std::vector<ArcSegment> tracking_arcs(const PiecewiseTrajectory& leader, double phi,
                                      double delta0, double t_from, double t_to, double v_from);

/// Enters the headway boundary and stays on it through the exit.
SafetySolution solve_safety_no_exit(double t0, double v0, const PiecewiseTrajectory& leader,
                                    const ScenarioConfig& cfg);

/// Enters the boundary at tau1 and leaves it at tau2 > tau1.
SafetySolution solve_safety_with_exit(double t0, double v0, const PiecewiseTrajectory& leader,
                                      const TerminalMode& mode, const ScenarioConfig& cfg);

/// Case-2 solve with tau1 held fixed.
std::optional<SafetySolution> safety_with_exit_at(double t0, double v0,
                                                  const PiecewiseTrajectory& leader, double tau1,
                                                  const TerminalMode& mode,
                                                  const ScenarioConfig& cfg);

/// Case-2 solve with tau1 held fixed, stacking pre-arc, tracking and post-arc
/// conditions into a single Newton system started from `guess`.
std::optional<SafetySolution> safety_with_exit_joint(double t0, double v0,
                                                     const PiecewiseTrajectory& leader,
                                                     double tau1, const TerminalMode& mode,
                                                     const ScenarioConfig& cfg,
                                                     const SafetySolution& guess);

/// p(t_c^f) = L with continuous control at t_c^f.
LateralSolution solve_lateral_interior(double t0, double v0, double t_cf, const TerminalMode& mode,
                                       const ScenarioConfig& cfg);

/// Saturated control, then an unconstrained cubic, then cruise at the speed
/// limit. `upper` selects u_max/v_max; otherwise the mirrored u_min/v_min form.
SaturationSolution solve_umax_vmax(double t0, double v0, const TerminalMode& mode,
                                   const ScenarioConfig& cfg, bool upper = true);

// ---------------------------------------------------------------------------
// Algorithm 1

enum class ConstraintKind { Control, Speed, RearEnd, Lateral };
const char* to_string(ConstraintKind k);

struct Violation {
  ConstraintKind kind = ConstraintKind::Control;
  double t = 0.0;       // earliest violation time
  double amount = 0.0;  // worst excess
  bool upper = true;    // for bounds: upper limit violated
};

/// Earliest violation of each constraint kind, sorted by time then priority.
std::vector<Violation> find_violations(const PiecewiseTrajectory& traj, const QueueView& view,
                                       const ScenarioConfig& cfg);

struct SolveReport {
  bool feasible = false;
  std::string message;
  std::vector<std::string> history;  // P0 -> ... -> Pr
  std::vector<ConstraintKind> active;
  TerminalBounds bounds;
  TerminalMode mode = FreeTime{};
  std::string structure;  // "unconstrained", "safety-no-exit", ...
  std::optional<UnconstrainedParams> unconstrained;
  std::optional<SafetyArcParams> safety;
  std::optional<LateralSolution> lateral;
  std::optional<SaturationSolution> saturation;
  MultiplierRecord multipliers;
  double residual = 0.0;
  int newton_iterations = 0;
  int rounds = 0;  // constraint activations after the terminal mode settled
  bool extension = false;
  Cost cost;
};

struct SolveResult {
  PiecewiseTrajectory traj;
  SolveReport report;
};

/// Solves one CAV given its already-solved predecessors. Never throws for
/// infeasibility; check report.feasible.
SolveResult algorithm1(const VehicleArrival& arrival, const QueueView& view,
                       const ScenarioConfig& cfg);

}  // namespace cavopt
