#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "cavopt/newton.hpp"
#include "cavopt/solver.hpp"
#include "solver_util.hpp"

namespace cavopt {

using detail::absolute_coeffs;

std::vector<ArcSegment> tracking_arcs(const PiecewiseTrajectory& leader, double phi,
                                      double delta0, double t_from, double t_to, double v_from) {
  if (!(phi > 0.0)) throw DomainError("tracking the headway boundary needs phi > 0");
  if (!(t_to > t_from)) throw DomainError("empty tracking window");
  const PiecewiseTrajectory lk = leader.with_cruise_extension(t_to);
  std::vector<ArcSegment> out;
  double v = v_from;
  for (const auto& arc : lk.arcs()) {
    const double s = std::max(arc.t_start(), t_from);
    const double e = std::min(arc.t_end(), t_to);
    if (e - s <= 1e-12 * std::max(1.0, std::abs(e))) continue;

    // u_i + phi du_i/dt = u_k, with the polynomial and exponential parts
    // handled separately; C e^{-t/phi} absorbs the speed at the piece start.
    const PolyExp& fk = arc.form();
    const double a = fk.a;
    const double b = fk.b - phi * a;
    const double c = fk.c - phi * b;
    const double d = fk.d - phi * c - delta0;
    Poly q = fk.has_exponential() ? fk.q.antiderivative() * (1.0 / phi) : Poly({0.0});
    const double v_part = PolyExp(a, b, c, d, q, phi).state(s).v;
    const double C = (v_part - v) / (phi * std::exp(-s / phi));
    if (!std::isfinite(C)) throw DomainError("tracking amplitude overflow");
    q = q + Poly({C});
    out.push_back(ArcSegment::tracking(a, b, c, d, q.coeffs(), phi, s, e));
    v = out.back().state(e).v;
  }
  return out;
}

namespace {

constexpr double kFeasTol = 1e-7;

double leader_horizon(const PiecewiseTrajectory& leader, const ScenarioConfig& cfg) {
  const double vk = leader.terminal_speed();
  if (!(vk > 0.0)) throw InfeasibleError("leader exit speed must be positive");
  return leader.tf() + (cfg.phi * (3.0 * cfg.v_max + 20.0) + cfg.delta0) / vk + 10.0;
}

std::vector<ArcSegment> truncate(const std::vector<ArcSegment>& arcs, double t_end) {
  std::vector<ArcSegment> out;
  for (const auto& a : arcs) {
    if (a.t_start() >= t_end) break;
    out.push_back(a.t_end() > t_end ? a.with_window(a.t_start(), t_end) : a);
  }
  return out;
}

std::optional<double> first_reach(const std::vector<ArcSegment>& arcs, double p) {
  for (const auto& a : arcs) {
    if (a.state(a.t_end()).p < p) continue;
    double lo = a.t_start(), hi = a.t_end();
    if (a.state(lo).p >= p) return lo;
    for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, hi); ++it) {
      const double mid = 0.5 * (lo + hi);
      (a.state(mid).p < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  }
  return std::nullopt;
}

/// Pre-arc cubic from (t0, 0, v0) that is tangent to the boundary at tau.
struct PreArc {
  UnconstrainedParams p;
  ArcSegment arc;
  State end;
};

std::optional<PreArc> pre_arc(double t0, double v0, double tau, const PiecewiseTrajectory& lk,
                              const ScenarioConfig& cfg) {
  const double S = tau - t0;
  if (!(S > 0.0)) return std::nullopt;
  const double phi = cfg.phi;
  const State k = lk.eval_extended(tau);
  // (p + phi v)(tau) = p_k - delta0 and (v + phi u)(tau) = v_k, linear in (alpha, beta).
  const double m11 = S * S / 2.0 + phi * S, m12 = S * S * S / 6.0 + phi * S * S / 2.0;
  const double m21 = S + phi, m22 = S * S / 2.0 + phi * S;
  const double r1 = k.p - cfg.delta0 - v0 * S - phi * v0;
  const double r2 = k.v - v0;
  const double det = m11 * m22 - m12 * m21;
  if (!(std::abs(det) > 0.0)) return std::nullopt;
  const double beta = (r1 * m22 - m12 * r2) / det;
  const double alpha = (m11 * r2 - m21 * r1) / det;
  auto p = absolute_coeffs(t0, 0.0, v0, alpha, beta);
  p.tf = tau;
  auto arc = ArcSegment::cubic(p.a, p.b, p.c, p.d, t0, tau);
  return PreArc{p, arc, arc.state(tau)};
}

double arc_headway_excess(const ArcSegment& arc, const PiecewiseTrajectory& lk,
                          const ScenarioConfig& cfg, int samples) {
  double worst = -std::numeric_limits<double>::infinity();
  for (int s = 0; s <= samples; ++s) {
    const double t = arc.t_start() + arc.duration() * s / samples;
    worst = std::max(worst, detail::headway_excess(arc.state(t), lk.eval_extended(t), cfg));
  }
  return worst;
}

SafetyArcParams params_from(const PreArc& pre, const std::vector<ArcSegment>& track,
                            double leader_tf) {
  SafetyArcParams sp;
  sp.pre = pre.p;
  sp.tau = pre.p.tf;
  const auto& first = std::get<ExponentialTracking>(track.front().params());
  sp.a_k = first.a_k;
  sp.b_k = first.b_k;
  sp.c_k = first.c_k;
  sp.d_k = first.d_k;
  sp.c_e1 = first.c_e();
  for (const auto& a : track)
    if (a.t_start() >= leader_tf - 1e-12)
      if (const auto* et = std::get_if<ExponentialTracking>(&a.params())) {
        sp.c_e2 = et->c_e();
        break;
      }
  return sp;
}

double junction_residual(const PiecewiseTrajectory& traj) {
  double r = 0.0;
  for (double t : traj.breakpoints()) {
    const State l = traj.eval_left(t), rr = traj.eval(t);
    r = std::max({r, std::abs(l.p - rr.p), std::abs(l.v - rr.v), std::abs(l.u - rr.u)});
  }
  return r;
}

std::optional<SafetySolution> case1_at(double t0, double v0, double tau,
                                       const PiecewiseTrajectory& lk, double horizon,
                                       const ScenarioConfig& cfg) {
  const auto pre = pre_arc(t0, v0, tau, lk, cfg);
  if (!pre) return std::nullopt;
  if (arc_headway_excess(pre->arc, lk, cfg, 64) > kFeasTol) return std::nullopt;
  const auto track = tracking_arcs(lk, cfg.phi, cfg.delta0, tau, horizon, pre->end.v);
  const auto tf = first_reach(track, cfg.travel_distance());
  if (!tf || *tf <= tau) return std::nullopt;
  std::vector<ArcSegment> arcs{pre->arc};
  for (auto& a : truncate(track, *tf)) arcs.push_back(a);
  SafetySolution s;
  s.traj = detail::assemble(std::move(arcs));
  s.params = params_from(*pre, track, lk.tf());
  s.cost = cost(s.traj, cfg.gamma);
  s.residual = std::max(junction_residual(s.traj),
                        std::abs(s.traj.eval(s.traj.tf()).p - cfg.travel_distance()));
  return s;
}

std::optional<SafetySolution> case2_from_pre(const PreArc& pre,
                                             const PiecewiseTrajectory& lk,
                                             const TerminalMode& mode, double horizon,
                                             double leader_tf, const ScenarioConfig& cfg) {
  const double tau1 = pre.p.tf;
  const auto track = tracking_arcs(lk, cfg.phi, cfg.delta0, tau1, horizon, pre.end.v);
  double t_hi = first_reach(track, cfg.travel_distance()).value_or(horizon);
  if (const auto* f = std::get_if<FixedTime>(&mode)) t_hi = std::min(t_hi, f->tf);
  const double span = t_hi - tau1;
  if (!(span > 1e-6)) return std::nullopt;

  auto track_state = [&](double t) {
    for (const auto& a : track)
      if (t <= a.t_end()) return a.state(t);
    return track.back().state(t);
  };
  auto mismatch = [&](double tau2) {
    const State s = track_state(tau2);
    const auto tc = terminal_cubic(tau2, s.p, s.v, mode, cfg);
    if (!tc) throw SolverError("no terminal arc");
    return tc->beta - s.u;
  };

  std::optional<SafetySolution> best;
  for (double tau2 : bracket_roots(mismatch, tau1 + 1e-6 * span, t_hi - 1e-6 * span, 50)) {
    const State s = track_state(tau2);
    const auto tc = terminal_cubic(tau2, s.p, s.v, mode, cfg);
    if (!tc) continue;
    const ArcSegment post = tc->arc(tau2, s.p, s.v);
    if (arc_headway_excess(post, lk, cfg, 64) > kFeasTol) continue;
    std::vector<ArcSegment> arcs{pre.arc};
    for (auto& a : truncate(track, tau2)) arcs.push_back(a);
    arcs.push_back(post);
    SafetySolution sol;
    try {
      sol.traj = detail::assemble(std::move(arcs));
    } catch (const StructureError&) {
      continue;
    }
    sol.params = params_from(pre, track, leader_tf);
    sol.params.tau2 = tau2;
    auto pp = absolute_coeffs(tau2, s.p, s.v, tc->alpha, tc->beta);
    pp.tf = tau2 + tc->T;
    sol.params.post = pp;
    sol.cost = cost(sol.traj, cfg.gamma);
    sol.residual = std::max(junction_residual(sol.traj),
                            std::abs(sol.traj.eval(sol.traj.tf()).p - cfg.travel_distance()));
    sol.extension = tau2 > leader_tf;
    if (!best || sol.cost.J < best->cost.J) best = std::move(sol);
  }
  return best;
}

/// Scans f over (lo, hi) on n points, then refines the best feasible point by
/// Brent on its neighbourhood. Infeasible points return nullopt.
template <typename Eval>
std::optional<double> minimize_scan(const Eval& eval, double lo, double hi, int n) {
  std::vector<double> xs, js;
  for (int k = 1; k < n; ++k) {
    const double x = lo + (hi - lo) * k / n;
    const auto j = eval(x);
    xs.push_back(x);
    js.push_back(j ? *j : std::numeric_limits<double>::infinity());
  }
  const auto it = std::min_element(js.begin(), js.end());
  if (it == js.end() || !std::isfinite(*it)) return std::nullopt;
  const auto k = static_cast<std::size_t>(it - js.begin());
  const double a = k > 0 ? xs[k - 1] : lo + 1e-9 * (hi - lo);
  const double b = k + 1 < xs.size() ? xs[k + 1] : hi - 1e-9 * (hi - lo);
  const double penalty = *it + 1e6;
  const double x = brent_minimize(
      [&](double t) {
        const auto j = eval(t);
        return j ? *j : penalty + std::abs(t - xs[k]);
      },
      a, b, 1e-11);
  const auto jx = eval(x);
  if (jx && *jx <= *it) return x;
  return xs[k];
}

}  // namespace

SafetySolution solve_safety_no_exit(double t0, double v0, const PiecewiseTrajectory& leader,
                                    const ScenarioConfig& cfg) {
  if (!(cfg.phi > 0.0)) throw DomainError("safety arcs need phi > 0");
  const double horizon = leader_horizon(leader, cfg);
  const PiecewiseTrajectory lk = detail::extended_leader(leader, horizon);
  const double tkf = leader.tf();
  if (!(tkf > t0)) throw StructureError("leader exits before the follower enters");

  auto eval = [&](double tau) -> std::optional<double> {
    try {
      const auto s = case1_at(t0, v0, tau, lk, horizon, cfg);
      if (s) return s->cost.J;
    } catch (const std::exception&) {
    }
    return std::nullopt;
  };
  const auto tau = minimize_scan(eval, t0, tkf, 200);
  if (!tau) throw StructureError("no feasible entry time on the headway boundary before the leader exits");
  auto s = case1_at(t0, v0, *tau, lk, horizon, cfg);
  if (!s) throw StructureError("entry-time refinement lost feasibility");
  return *s;
}

std::optional<SafetySolution> safety_with_exit_at(double t0, double v0,
                                                  const PiecewiseTrajectory& leader, double tau1,
                                                  const TerminalMode& mode,
                                                  const ScenarioConfig& cfg) {
  if (!(cfg.phi > 0.0)) throw DomainError("safety arcs need phi > 0");
  const double horizon = leader_horizon(leader, cfg);
  const PiecewiseTrajectory lk = detail::extended_leader(leader, horizon);
  const auto pre = pre_arc(t0, v0, tau1, lk, cfg);
  if (!pre) return std::nullopt;
  if (arc_headway_excess(pre->arc, lk, cfg, 64) > kFeasTol) return std::nullopt;
  return case2_from_pre(*pre, lk, mode, horizon, leader.tf(), cfg);
}

SafetySolution solve_safety_with_exit(double t0, double v0, const PiecewiseTrajectory& leader,
                                      const TerminalMode& mode, const ScenarioConfig& cfg) {
  if (!(cfg.phi > 0.0)) throw DomainError("safety arcs need phi > 0");
  const double tkf = leader.tf();
  if (!(tkf > t0)) throw StructureError("leader exits before the follower enters");
  double hi = tkf;
  if (const auto* f = std::get_if<FixedTime>(&mode)) hi = std::min(hi, f->tf);

  auto eval = [&](double tau1) -> std::optional<double> {
    try {
      const auto s = safety_with_exit_at(t0, v0, leader, tau1, mode, cfg);
      if (s) return s->cost.J;
    } catch (const std::exception&) {
    }
    return std::nullopt;
  };
  const auto tau1 = minimize_scan(eval, t0, hi, 60);
  if (!tau1) throw InfeasibleError("no exit point after the entry point (tau2 < tau1)");
  auto s = safety_with_exit_at(t0, v0, leader, *tau1, mode, cfg);
  if (!s) throw StructureError("entry-time refinement lost feasibility");
  return *s;
}

std::optional<SafetySolution> safety_with_exit_joint(double t0, double v0,
                                                     const PiecewiseTrajectory& leader,
                                                     double tau1, const TerminalMode& mode,
                                                     const ScenarioConfig& cfg,
                                                     const SafetySolution& guess) {
  if (std::holds_alternative<FollowerTime>(mode) || !guess.params.post || !guess.params.tau2)
    return std::nullopt;
  const bool free_tf = std::holds_alternative<FreeTime>(mode);
  const double horizon = leader_horizon(leader, cfg);
  const PiecewiseTrajectory lk = detail::extended_leader(leader, horizon);
  const double D = cfg.travel_distance();
  const State k1 = lk.eval_extended(tau1);

  auto cubic_state = [](const double* c, double t) {
    return State{((c[0] / 6.0 * t + 0.5 * c[1]) * t + c[2]) * t + c[3],
                 (0.5 * c[0] * t + c[1]) * t + c[2], c[0] * t + c[1]};
  };
  // x = (a, b, c, d, v1, e, r, q, m, tau2[, tf])
  Residual f = [&](const Eigen::VectorXd& x) {
    const double tau2 = x[9];
    const double tf = free_tf ? x[10] : std::get<FixedTime>(mode).tf;
    if (!(tau2 > tau1) || !(tf > tau2)) throw DomainError("arc order");
    const State pre1 = cubic_state(x.data(), tau1);
    const State pre0 = cubic_state(x.data(), t0);
    const auto track = tracking_arcs(lk, cfg.phi, cfg.delta0, tau1, tau2, x[4]);
    const State tr = track.back().state(tau2);
    const State post2 = cubic_state(x.data() + 5, tau2);
    const State postf = cubic_state(x.data() + 5, tf);
    Eigen::VectorXd r(free_tf ? 11 : 10);
    r[0] = pre0.p;
    r[1] = pre0.v - v0;
    r[2] = pre1.p + cfg.phi * pre1.v + cfg.delta0 - k1.p;
    r[3] = pre1.v + cfg.phi * pre1.u - k1.v;
    r[4] = pre1.v - x[4];
    r[5] = tr.p - post2.p;
    r[6] = tr.v - post2.v;
    r[7] = tr.u - post2.u;
    r[8] = postf.p - D;
    r[9] = postf.u;
    if (free_tf) r[10] = cfg.gamma + x[5] * postf.v;
    return r;
  };

  const auto& g = guess.params;
  Eigen::VectorXd x0(free_tf ? 11 : 10);
  x0[0] = g.pre.a;
  x0[1] = g.pre.b;
  x0[2] = g.pre.c;
  x0[3] = g.pre.d;
  x0[4] = guess.traj.eval(tau1).v;
  x0[5] = g.post->a;
  x0[6] = g.post->b;
  x0[7] = g.post->c;
  x0[8] = g.post->d;
  x0[9] = *g.tau2;
  if (free_tf) x0[10] = g.post->tf;
  // Start away from the piecewise answer so the joint solve does real work.
  for (Eigen::Index i = 0; i < x0.size(); ++i) x0[i] *= 1.0 + 1e-4 * ((i % 2) ? 1.0 : -1.0);

  const NewtonResult nr = damped_newton(f, x0);
  if (!nr.converged) return std::nullopt;
  const Eigen::VectorXd& x = nr.x;
  const double tau2 = x[9];
  const double tf = free_tf ? x[10] : std::get<FixedTime>(mode).tf;

  SafetySolution s;
  s.params = g;
  s.params.pre = {x[0], x[1], x[2], x[3], tau1};
  s.params.post = UnconstrainedParams{x[5], x[6], x[7], x[8], tf};
  s.params.tau = tau1;
  s.params.tau2 = tau2;
  std::vector<ArcSegment> arcs{ArcSegment::cubic(x[0], x[1], x[2], x[3], t0, tau1)};
  for (auto& a : tracking_arcs(lk, cfg.phi, cfg.delta0, tau1, tau2, x[4])) arcs.push_back(a);
  arcs.push_back(ArcSegment::cubic(x[5], x[6], x[7], x[8], tau2, tf));
  s.traj = PiecewiseTrajectory::unchecked(std::move(arcs));
  s.cost = cost(s.traj, cfg.gamma);
  s.residual = nr.residual;
  s.extension = tau2 > leader.tf();
  return s;
}

}  // namespace cavopt
