#include <cmath>
#include <limits>
#include <sstream>

#include "cavopt/newton.hpp"
#include "cavopt/solver.hpp"
#include "solver_util.hpp"

namespace cavopt {

namespace {

struct LateralCandidate {
  UnconstrainedParams cz, mz;
  TerminalCubic tc;
  double J = 0.0;
};

std::optional<LateralCandidate> lateral_at(double t0, double v0, double tm, double vm,
                                           const TerminalMode& mode, const ScenarioConfig& cfg) {
  const auto [alpha, beta] = detail::cubic_between(0.0, v0, cfg.L, vm, tm - t0);
  const auto tc = terminal_cubic(tm, cfg.L, vm, mode, cfg);
  if (!tc) return std::nullopt;
  LateralCandidate c;
  c.cz = detail::absolute_coeffs(t0, 0.0, v0, alpha, beta);
  c.cz.tf = tm;
  c.mz = detail::absolute_coeffs(tm, cfg.L, vm, tc->alpha, tc->beta);
  c.mz.tf = tm + tc->T;
  c.tc = *tc;
  c.J = cfg.gamma * (c.mz.tf - t0) + detail::local_energy(alpha, beta, tm - t0) + tc->energy();
  return c;
}

State cubic_state(const UnconstrainedParams& p, double t) {
  return {((p.a / 6.0 * t + 0.5 * p.b) * t + p.c) * t + p.d, (0.5 * p.a * t + p.b) * t + p.c,
          p.a * t + p.b};
}

}  // namespace

LateralSolution solve_lateral_interior(double t0, double v0, double t_cf, const TerminalMode& mode,
                                       const ScenarioConfig& cfg) {
  if (!(t_cf > t0)) throw StructureError("conflicting vehicle exits before this vehicle enters");
  if (const auto* f = std::get_if<FixedTime>(&mode))
    if (!(f->tf > t_cf)) throw StructureError("fixed exit time precedes the merging-zone entry");

  // u continuity at t_m is a single condition on the entry speed v_m.
  auto mismatch = [&](double vm) {
    const auto c = lateral_at(t0, v0, t_cf, vm, mode, cfg);
    if (!c) throw SolverError("no merging-zone arc");
    return (c->cz.a * t_cf + c->cz.b) - (c->mz.a * t_cf + c->mz.b);
  };
  const double v_hi = 2.0 * std::max(cfg.v_max, v0) + 10.0;
  std::optional<LateralCandidate> best;
  for (double vm : bracket_roots(mismatch, 1e-3, v_hi, 400)) {
    const auto c = lateral_at(t0, v0, t_cf, vm, mode, cfg);
    if (!c || !(c->mz.tf > t_cf)) continue;
    if (!best || c->J < best->J) best = c;
  }
  if (!best) throw SolverError("no entry speed gives a continuous control at the merging zone");

  // Polish the stacked system: 8 linear conditions plus the terminal ones.
  const double D = cfg.travel_distance();
  const bool free_tf = std::holds_alternative<FreeTime>(mode);
  const auto* follower = std::get_if<FollowerTime>(&mode);
  const int n = 8 + (free_tf ? 1 : 0) + (follower ? 2 : 0);
  Residual f = [&](const Eigen::VectorXd& x) {
    const UnconstrainedParams cz{x[0], x[1], x[2], x[3], t_cf};
    double tf = 0.0;
    if (const auto* fx = std::get_if<FixedTime>(&mode)) tf = fx->tf;
    else tf = x[8];
    const UnconstrainedParams mz{x[4], x[5], x[6], x[7], tf};
    const State s0 = cubic_state(cz, t0), s1 = cubic_state(cz, t_cf);
    const State s2 = cubic_state(mz, t_cf), sf = cubic_state(mz, tf);
    Eigen::VectorXd r(n);
    r[0] = s0.p;
    r[1] = s0.v - v0;
    r[2] = s1.p - cfg.L;
    r[3] = s2.p - cfg.L;
    r[4] = s1.v - s2.v;
    r[5] = s1.u - s2.u;
    r[6] = sf.p - D;
    if (follower) {
      const double eta = x[9];
      r[7] = sf.u - eta * cfg.phi;
      r[8] = cfg.gamma - 0.5 * mz.b * mz.b + mz.a * mz.c + eta * follower->vk_f;
      r[9] = follower->vk_f * (tf - follower->tk_f) - cfg.phi * sf.v - cfg.delta0;
    } else {
      r[7] = sf.u;
      if (free_tf) r[8] = cfg.gamma + mz.a * sf.v;
    }
    return r;
  };
  Eigen::VectorXd x0(n);
  x0 << best->cz.a, best->cz.b, best->cz.c, best->cz.d, best->mz.a, best->mz.b, best->mz.c,
      best->mz.d, Eigen::VectorXd::Zero(n - 8);
  if (n > 8) x0[8] = best->mz.tf;
  if (follower) x0[9] = best->tc.eta.value_or(0.0);
  const NewtonResult nr = damped_newton(f, x0);

  LateralSolution s;
  s.t_m = t_cf;
  s.cz = best->cz;
  s.mz = best->mz;
  s.residual = f(x0).lpNorm<Eigen::Infinity>();
  if (nr.converged && nr.residual <= s.residual) {
    s.cz = {nr.x[0], nr.x[1], nr.x[2], nr.x[3], t_cf};
    s.mz = {nr.x[4], nr.x[5], nr.x[6], nr.x[7], n > 8 ? nr.x[8] : best->mz.tf};
    s.residual = nr.residual;
    s.iterations = nr.iterations;
    if (follower) s.eta = nr.x[9];
  } else if (follower) {
    s.eta = best->tc.eta;
  }
  s.zeta = s.cz.a - s.mz.a;
  s.traj = PiecewiseTrajectory({ArcSegment::cubic(s.cz.a, s.cz.b, s.cz.c, s.cz.d, t0, t_cf),
                                ArcSegment::cubic(s.mz.a, s.mz.b, s.mz.c, s.mz.d, t_cf, s.mz.tf)});
  return s;
}

}  // namespace cavopt
