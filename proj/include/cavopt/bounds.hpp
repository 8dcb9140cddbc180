#pragma once

#include <optional>

#include "cavopt/coordinator.hpp"
#include "cavopt/model.hpp"

namespace cavopt {

enum class BindingTerm { SpeedControl, Follower, OppositeOrAdjacent };

const char* to_string(BindingTerm b);

struct SpeedControlBound {
  double t_L = 0.0;
  double vf_hypothesis = 0.0;  // exit speed of the max-acceleration profile
  bool reaches_v_max = false;
};

struct TerminalBounds {
  double t_L = 0.0;
  std::optional<double> t_U;  // absent when the vehicle could stop
  double t_lower_composite = 0.0;
  BindingTerm binding_term = BindingTerm::SpeedControl;
  // Individual terms; absent predecessors leave them empty.
  std::optional<double> follower_term;
  std::optional<double> other_term;
};

/// Earliest exit: full acceleration, then cruise once v_max is reached.
SpeedControlBound t_lower_speed_control(double t0, double v0, const ScenarioConfig& cfg);

/// Latest exit: full deceleration, then cruise once v_min is reached.
std::optional<double> t_upper(double t0, double v0, const ScenarioConfig& cfg);

/// Earliest exit time that respects the speed/control limits, the same-lane
/// leader's headway at its exit and the exit of the latest non-rear-end
/// predecessor. `vf_i` is the hypothesized exit speed of vehicle i.
TerminalBounds t_lower_composite(const VehicleArrival& i, const QueueView& q,
                                 const ScenarioConfig& cfg, double vf_i);

}  // namespace cavopt
