#include "cavopt/bounds.hpp"

#include <cmath>

namespace cavopt {

const char* to_string(BindingTerm b) {
  switch (b) {
    case BindingTerm::SpeedControl: return "speed-control";
    case BindingTerm::Follower: return "follower";
    case BindingTerm::OppositeOrAdjacent: return "opposite-or-adjacent";
  }
  return "?";
}

SpeedControlBound t_lower_speed_control(double t0, double v0, const ScenarioConfig& cfg) {
  const double D = cfg.travel_distance();
  const double um = cfg.u_max;
  const double vm = cfg.v_max;
  const double radicand = 2.0 * D * um + v0 * v0;
  SpeedControlBound out;
  if (radicand > vm * vm) {
    out.t_L = t0 + D / vm + (vm - v0) * (vm - v0) / (2.0 * um * vm);
    out.vf_hypothesis = vm;
    out.reaches_v_max = true;
  } else {
    const double vf = std::sqrt(radicand);
    out.t_L = t0 + (vf - v0) / um;
    out.vf_hypothesis = vf;
  }
  return out;
}

std::optional<double> t_upper(double t0, double v0, const ScenarioConfig& cfg) {
  const double D = cfg.travel_distance();
  const double um = cfg.u_min;
  const double vm = cfg.v_min;
  const double radicand = 2.0 * D * um + v0 * v0;
  if (radicand < vm * vm) {
    if (vm <= 0.0) return std::nullopt;
    return t0 + D / vm + (vm - v0) * (vm - v0) / (2.0 * um * vm);
  }
  return t0 + (std::sqrt(radicand) - v0) / um;
}

TerminalBounds t_lower_composite(const VehicleArrival& i, const QueueView& q,
                                 const ScenarioConfig& cfg, double vf_i) {
  TerminalBounds tb;
  tb.t_L = t_lower_speed_control(i.t0, i.v0, cfg).t_L;
  tb.t_U = t_upper(i.t0, i.v0, cfg);
  tb.t_lower_composite = tb.t_L;
  tb.binding_term = BindingTerm::SpeedControl;

  if (q.k) {
    if (!q.k->traj) throw StructureError("same-lane predecessor has no solution yet");
    const double tkf = q.k->traj->tf();
    const double vkf = q.k->traj->terminal_speed();
    if (!(vkf > 0.0))
      throw InfeasibleError("same-lane predecessor exits at zero speed; follower bound undefined");
    tb.follower_term = tkf + (cfg.phi * vf_i + cfg.delta0) / vkf;
    if (*tb.follower_term > tb.t_lower_composite) {
      tb.t_lower_composite = *tb.follower_term;
      tb.binding_term = BindingTerm::Follower;
    }
  }
  if (q.o) {
    if (!q.o->traj) throw StructureError("predecessor has no solution yet");
    tb.other_term = q.o->traj->tf();
    if (*tb.other_term > tb.t_lower_composite) {
      tb.t_lower_composite = *tb.other_term;
      tb.binding_term = BindingTerm::OppositeOrAdjacent;
    }
  }
  return tb;
}

}  // namespace cavopt
