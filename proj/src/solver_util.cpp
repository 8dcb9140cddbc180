#include "solver_util.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cavopt::detail {

UnconstrainedParams absolute_coeffs(double ts, double ps, double vs, double alpha, double beta) {
  UnconstrainedParams p;
  p.a = alpha;
  p.b = beta - alpha * ts;
  p.c = vs - (0.5 * p.a * ts + p.b) * ts;
  p.d = ps - ((p.a / 6.0 * ts + 0.5 * p.b) * ts + p.c) * ts;
  return p;
}

std::pair<double, double> cubic_between(double ps, double vs, double pe, double ve, double T) {
  const double dv = ve - vs;
  const double dp = pe - ps - vs * T;
  const double alpha = (6.0 * dv * T - 12.0 * dp) / (T * T * T);
  const double beta = (dv - 0.5 * alpha * T * T) / T;
  return {alpha, beta};
}

double local_energy(double alpha, double beta, double T) {
  return 0.5 * (beta * beta * T + alpha * beta * T * T + alpha * alpha * T * T * T / 3.0);
}

double headway_excess(const State& follower, const State& leader, const ScenarioConfig& cfg) {
  return follower.p + cfg.phi * follower.v + cfg.delta0 - leader.p;
}

double max_headway_excess(const PiecewiseTrajectory& follower, const PiecewiseTrajectory& leader,
                          double t_from, double t_to, const ScenarioConfig& cfg, int samples) {
  double worst = -std::numeric_limits<double>::infinity();
  for (int s = 0; s <= samples; ++s) {
    const double t = t_from + (t_to - t_from) * s / samples;
    worst = std::max(worst, headway_excess(follower.eval(t), leader.eval_extended(t), cfg));
  }
  return worst;
}

PiecewiseTrajectory extended_leader(const PiecewiseTrajectory& leader, double horizon) {
  return leader.with_cruise_extension(std::max(horizon, leader.tf() + 1.0));
}

PiecewiseTrajectory assemble(std::vector<ArcSegment> arcs) {
  std::vector<ArcSegment> kept;
  for (auto& a : arcs)
    if (a.duration() > 1e-12 * std::max(1.0, std::abs(a.t_end()))) kept.push_back(std::move(a));
  // Re-stitch windows so that dropped slivers leave no holes.
  for (std::size_t k = 1; k < kept.size(); ++k)
    if (kept[k].t_start() != kept[k - 1].t_end())
      kept[k] = kept[k].with_window(kept[k - 1].t_end(), kept[k].t_end());
  return PiecewiseTrajectory(std::move(kept));
}

}  // namespace cavopt::detail
