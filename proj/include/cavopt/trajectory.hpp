#pragma once

#include <optional>
#include <vector>

#include "cavopt/arc.hpp"

namespace cavopt {

/// Ordered, contiguous arcs. Immutable once built.
class PiecewiseTrajectory {
 public:
  PiecewiseTrajectory() = default;
  /// Validates contiguity and p/v continuity (1e-9 relative); throws StructureError.
  explicit PiecewiseTrajectory(std::vector<ArcSegment> arcs);
  /// Skips the continuity check. Used to build deliberately broken trajectories
  /// for audit tests; contiguity in time is still required.
  static PiecewiseTrajectory unchecked(std::vector<ArcSegment> arcs);

  bool empty() const { return arcs_.empty(); }
  const std::vector<ArcSegment>& arcs() const { return arcs_; }
  double t0() const;
  double tf() const;
  double terminal_speed() const;
  std::vector<double> breakpoints() const;  // interior junction times

  /// Throws DomainError when t lies outside [t0, tf]. At a junction the right
  /// arc is used.
  State eval(double t) const;
  /// Values from the arc on the left of t (identical to eval away from junctions).
  State eval_left(double t) const;
  /// Like eval, but continues at the terminal speed after tf.
  State eval_extended(double t) const;

  /// Same arcs followed by a cruise at the terminal speed up to t_end.
  PiecewiseTrajectory with_cruise_extension(double t_end) const;

  /// First time the position reaches p, by bisection; nullopt if never within [t0, tf].
  std::optional<double> time_at_position(double p) const;

 private:
  struct Unchecked {};
  PiecewiseTrajectory(std::vector<ArcSegment> arcs, Unchecked);
  std::size_t locate(double t) const;

  std::vector<ArcSegment> arcs_;
};

struct Cost {
  double J = 0.0;  // gamma T + E
  double T = 0.0;  // travel time
  double E = 0.0;  // integral of u^2/2
};

Cost cost(const PiecewiseTrajectory& traj, double gamma);

}  // namespace cavopt
