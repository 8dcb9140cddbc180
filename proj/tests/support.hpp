#pragma once

#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "cavopt/scenario.hpp"
#include "cavopt/solver.hpp"
#include "cavopt/verifier.hpp"

namespace testsupport {

using namespace cavopt;

inline VehicleArrival car(int id, double t0, double v0, const std::string& road = "NS",
                          std::optional<double> tf = std::nullopt) {
  VehicleArrival a;
  a.id = id;
  a.t0 = t0;
  a.v0 = v0;
  a.road = road;
  a.movement = road == "NS" ? "southbound" : "eastbound";
  a.tf_fixed = tf;
  return a;
}

struct Solved {
  VehicleArrival arrival;
  QueueView view;
  SolveResult result;
};

/// Solves the arrivals in queue order; stops at the first infeasible vehicle.
inline std::vector<Solved> solve_all(const std::vector<VehicleArrival>& arrivals,
                                     const ScenarioConfig& cfg) {
  Queue q(cfg.rng_seed);
  q.enqueue_all(arrivals);
  std::vector<Solved> out;
  for (const auto& a : q.entries()) {
    const QueueView view = q.classify(a.id, cfg.conflict);
    out.push_back({a, view, algorithm1(a, view, cfg)});
    if (!out.back().result.report.feasible) break;
    q.set_solution(a.id, out.back().result.traj);
  }
  return out;
}

inline double u_jump(const PiecewiseTrajectory& tr, double t) {
  return std::abs(tr.eval(t).u - tr.eval_left(t).u);
}

/// Largest |p_k - p_i - phi v_i - delta0| over [t1, t2].
inline double gap_deviation(const PiecewiseTrajectory& follower, const PiecewiseTrajectory& leader,
                            const ScenarioConfig& cfg, double t1, double t2) {
  double worst = 0.0;
  for (int s = 0; s <= 2000; ++s) {
    const double t = t1 + (t2 - t1) * s / 2000.0;
    const State f = follower.eval(t);
    worst = std::max(worst,
                     std::abs(leader.eval_extended(t).p - f.p - cfg.phi * f.v - cfg.delta0));
  }
  return worst;
}

/// Random multi-vehicle scenario on the default four-approach intersection:
/// 2 to 10 vehicles, headways of 2 to 6 s, entry speeds 8 to 14 m/s.
inline std::vector<VehicleArrival> random_arrivals(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> count(2, 10), approach(0, 3);
  std::uniform_real_distribution<double> headway(2.0, 6.0), speed(8.0, 14.0);
  static const char* roads[] = {"NS", "NS", "EW", "EW"};
  static const char* moves[] = {"southbound", "northbound", "eastbound", "westbound"};
  const int n = count(rng);
  std::vector<VehicleArrival> out;
  double t = 0.0;
  for (int i = 0; i < n; ++i) {
    const int k = approach(rng);
    VehicleArrival a;
    a.id = i + 1;
    a.t0 = t;
    a.v0 = speed(rng);
    a.road = roads[k];
    a.movement = moves[k];
    out.push_back(a);
    t += headway(rng);
  }
  return out;
}

}  // namespace testsupport
