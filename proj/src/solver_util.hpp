#pragma once

#include <utility>

#include "cavopt/solver.hpp"

namespace cavopt::detail {

/// Absolute-time coefficients of u = beta + alpha (t - ts) from state (ts, ps, vs).
UnconstrainedParams absolute_coeffs(double ts, double ps, double vs, double alpha, double beta);

/// Local (alpha, beta) of the cubic joining (ps, vs) at 0 to (pe, ve) at T.
std::pair<double, double> cubic_between(double ps, double vs, double pe, double ve, double T);

/// Integral of (beta + alpha s)^2 / 2 over [0, T].
double local_energy(double alpha, double beta, double T);

/// Gap function p_i + phi v_i + delta0 - p_k; positive means violated.
double headway_excess(const State& follower, const State& leader, const ScenarioConfig& cfg);

/// Largest headway excess over a uniform probe of [t_from, t_to].
double max_headway_excess(const PiecewiseTrajectory& follower, const PiecewiseTrajectory& leader,
                          double t_from, double t_to, const ScenarioConfig& cfg, int samples);

/// Leader trajectory continued at its exit speed far enough for follower solves.
PiecewiseTrajectory extended_leader(const PiecewiseTrajectory& leader, double horizon);

/// Builds a trajectory dropping zero-length arcs.
PiecewiseTrajectory assemble(std::vector<ArcSegment> arcs);

}  // namespace cavopt::detail
