#include <algorithm>
#include <cmath>
#include <limits>

#include "cavopt/bounds.hpp"
#include "cavopt/newton.hpp"
#include "cavopt/solver.hpp"
#include "solver_util.hpp"

namespace cavopt {

namespace {

struct Limits {
  double u;  // saturated control, u_max or u_min
  double v;  // speed limit to cruise at, v_max or v_min
  bool upper;
};

/// Terminal-condition residual of a structure that ends in a cruise at v_lim
/// starting at tau2 with middle-arc slope alpha, exiting at tf.
double cruise_terminal(double alpha, double tf, const Limits& lim, const TerminalMode& mode,
                       const ScenarioConfig& cfg) {
  if (std::holds_alternative<FreeTime>(mode)) return cfg.gamma + alpha * lim.v;
  if (const auto* f = std::get_if<FixedTime>(&mode)) return tf - f->tf;
  const auto& m = std::get<FollowerTime>(mode);
  return tf - (m.tk_f + (cfg.phi * lim.v + cfg.delta0) / m.vk_f);
}

struct Candidate {
  std::vector<ArcSegment> arcs;
  std::optional<double> tau1, tau2;
  double J = std::numeric_limits<double>::infinity();
};

/// Saturated arc [t0, tau1], cubic ramp to the speed limit, cruise to D.
std::optional<Candidate> ramp_cruise(double t0, double v0, double tau1, const Limits& lim,
                                     const ScenarioConfig& cfg, double* tf_out,
                                     double* alpha_out) {
  const double D = cfg.travel_distance();
  const double s1 = tau1 - t0;
  const double v1 = v0 + lim.u * s1;
  const double p1 = v0 * s1 + 0.5 * lim.u * s1 * s1;
  const double h = 2.0 * (lim.v - v1) / lim.u;
  if (!(h > 0.0) || !(s1 >= 0.0)) return std::nullopt;
  const double alpha = -lim.u / h;
  const double p2 = p1 + v1 * h + lim.u * h * h / 3.0;
  if (!(p2 < D) || !(lim.v > 0.0)) return std::nullopt;
  const double tau2 = tau1 + h;
  const double tf = tau2 + (D - p2) / lim.v;
  if (tf_out) *tf_out = tf;
  if (alpha_out) *alpha_out = alpha;
  Candidate c;
  if (s1 > 0.0) c.arcs.push_back(ArcSegment::saturated(lim.u, v0, 0.0, t0, tau1));
  const auto mid = detail::absolute_coeffs(tau1, p1, v1, alpha, lim.u);
  c.arcs.push_back(ArcSegment::cubic(mid.a, mid.b, mid.c, mid.d, tau1, tau2));
  c.arcs.push_back(ArcSegment::cruise(lim.v, p2, tau2, tf));
  if (s1 > 0.0) c.tau1 = tau1;
  c.tau2 = tau2;
  c.J = cfg.gamma * (tf - t0) + 0.5 * lim.u * lim.u * s1 + detail::local_energy(alpha, lim.u, h);
  return c;
}

/// Cubic from (t0, v0) with free initial control reaching the limit speed
/// with zero control after h, then cruise.
std::optional<Candidate> cubic_cruise(double t0, double v0, double h, const Limits& lim,
                                      const ScenarioConfig& cfg, double* tf_out,
                                      double* alpha_out) {
  const double D = cfg.travel_distance();
  if (!(h > 0.0) || !(lim.v > 0.0)) return std::nullopt;
  const double alpha = -2.0 * (lim.v - v0) / (h * h);
  const double u0 = -alpha * h;
  const double p2 = v0 * h - alpha * h * h * h / 3.0;
  if (!(p2 < D)) return std::nullopt;
  const double tau2 = t0 + h;
  const double tf = tau2 + (D - p2) / lim.v;
  if (tf_out) *tf_out = tf;
  if (alpha_out) *alpha_out = alpha;
  Candidate c;
  const auto mid = detail::absolute_coeffs(t0, 0.0, v0, alpha, u0);
  c.arcs.push_back(ArcSegment::cubic(mid.a, mid.b, mid.c, mid.d, t0, tau2));
  c.arcs.push_back(ArcSegment::cruise(lim.v, p2, tau2, tf));
  c.tau2 = tau2;
  c.J = cfg.gamma * (tf - t0) + detail::local_energy(alpha, u0, h);
  return c;
}

/// Saturated arc [t0, tau1] then a terminal cubic starting at the limit control.
std::optional<Candidate> sat_terminal(double t0, double v0, double tau1, const Limits& lim,
                                      const TerminalMode& mode, const ScenarioConfig& cfg,
                                      double* mismatch) {
  const double s1 = tau1 - t0;
  if (!(s1 > 0.0)) return std::nullopt;
  const double v1 = v0 + lim.u * s1;
  const double p1 = v0 * s1 + 0.5 * lim.u * s1 * s1;
  if (!(v1 > 0.0) || !(p1 < cfg.travel_distance())) return std::nullopt;
  const auto tc = terminal_cubic(tau1, p1, v1, mode, cfg);
  if (!tc) return std::nullopt;
  if (mismatch) *mismatch = tc->beta - lim.u;
  Candidate c;
  c.arcs.push_back(ArcSegment::saturated(lim.u, v0, 0.0, t0, tau1));
  c.arcs.push_back(tc->arc(tau1, p1, v1));
  c.tau1 = tau1;
  c.J = cfg.gamma * (tau1 + tc->T - t0) + 0.5 * lim.u * lim.u * s1 + tc->energy();
  return c;
}

bool within_limits(const Candidate& c, const ScenarioConfig& cfg) {
  constexpr double tol = 1e-9;
  for (const auto& a : c.arcs) {
    for (double t : {a.t_start(), a.t_end()}) {
      const State s = a.state(t);
      if (s.u > cfg.u_max + tol || s.u < cfg.u_min - tol) return false;
      if (s.v > cfg.v_max + tol || s.v < cfg.v_min - tol) return false;
    }
    for (const auto& [t, v] : arc_extrema(a).speed)
      if (v > cfg.v_max + tol || v < cfg.v_min - tol) return false;
  }
  return true;
}

}  // namespace

SaturationSolution solve_umax_vmax(double t0, double v0, const TerminalMode& mode,
                                   const ScenarioConfig& cfg, bool upper) {
  const Limits lim{upper ? cfg.u_max : cfg.u_min, upper ? cfg.v_max : cfg.v_min, upper};
  const double t_reach = t0 + (lim.v - v0) / lim.u;  // saturated arc hits the speed limit
  std::vector<Candidate> found;

  auto keep = [&](std::optional<Candidate> c) {
    if (c && c->arcs.size() > 0 && within_limits(*c, cfg)) found.push_back(std::move(*c));
  };

  // Bang-cruise: the fastest (or slowest) admissible profile, with a control jump.
  const auto* fixed = std::get_if<FixedTime>(&mode);
  if (fixed && lim.v > 0.0 && t_reach > t0) {
    const double s = t_reach - t0;
    const double p_reach = v0 * s + 0.5 * lim.u * s * s;
    if (p_reach < cfg.travel_distance()) {
      const double tf_bang = t_reach + (cfg.travel_distance() - p_reach) / lim.v;
      if (std::abs(tf_bang - fixed->tf) <= 1e-9 * std::max(1.0, fixed->tf)) {
        Candidate c;
        c.arcs.push_back(ArcSegment::saturated(lim.u, v0, 0.0, t0, t_reach));
        c.arcs.push_back(ArcSegment::cruise(lim.v, p_reach, t_reach, tf_bang));
        c.tau1 = c.tau2 = t_reach;
        c.J = cfg.gamma * (tf_bang - t0) + 0.5 * lim.u * lim.u * s;
        SaturationSolution out;
        out.traj = PiecewiseTrajectory(c.arcs);
        out.tau1 = c.tau1;
        out.tau2 = c.tau2;
        out.upper = upper;
        out.collapsed = true;
        out.extension = !upper;
        return out;
      }
    }
  }

  if (lim.v > 0.0 && t_reach > t0) {
    // Saturated arc, ramp, cruise: one unknown tau1.
    auto g = [&](double tau1) {
      double tf = 0.0, alpha = 0.0;
      if (!ramp_cruise(t0, v0, tau1, lim, cfg, &tf, &alpha)) throw SolverError("invalid");
      return cruise_terminal(alpha, tf, lim, mode, cfg);
    };
    for (double tau1 : bracket_roots(g, t0, t_reach, 200))
      keep(ramp_cruise(t0, v0, tau1, lim, cfg, nullptr, nullptr));

    // Ramp with unsaturated start, cruise: one unknown ramp length h.
    const double h_min = 2.0 * (lim.v - v0) / lim.u;
    const double h_max = cfg.travel_distance() / (v0 + 2.0 * (lim.v - v0) / 3.0);
    if (h_max > h_min) {
      auto gh = [&](double h) {
        double tf = 0.0, alpha = 0.0;
        if (!cubic_cruise(t0, v0, h, lim, cfg, &tf, &alpha)) throw SolverError("invalid");
        return cruise_terminal(alpha, tf, lim, mode, cfg);
      };
      for (double h : bracket_roots(gh, h_min, h_max, 200))
        keep(cubic_cruise(t0, v0, h, lim, cfg, nullptr, nullptr));
    }
  }

  // Saturated arc then terminal cubic, no cruise.
  {
    double hi = t_reach > t0 ? t_reach : t0 + cfg.travel_distance() / std::max(v0, 1.0);
    if (fixed) hi = std::min(hi, fixed->tf);
    auto g = [&](double tau1) {
      double mm = 0.0;
      if (!sat_terminal(t0, v0, tau1, lim, mode, cfg, &mm)) throw SolverError("invalid");
      return mm;
    };
    if (hi > t0)
      for (double tau1 : bracket_roots(g, t0, hi, 200))
        keep(sat_terminal(t0, v0, tau1, lim, mode, cfg, nullptr));
  }

  if (found.empty())
    throw InfeasibleError("no saturated/cruise structure meets the terminal conditions");
  const auto best = std::min_element(found.begin(), found.end(),
                                     [](const auto& x, const auto& y) { return x.J < y.J; });
  SaturationSolution out;
  out.traj = detail::assemble(best->arcs);
  out.tau1 = best->tau1;
  out.tau2 = best->tau2;
  out.upper = upper;
  out.extension = !upper;
  // Junction and terminal residuals.
  double r = std::abs(out.traj.eval(out.traj.tf()).p - cfg.travel_distance());
  for (double t : out.traj.breakpoints()) {
    const State a = out.traj.eval_left(t), b = out.traj.eval(t);
    r = std::max({r, std::abs(a.p - b.p), std::abs(a.v - b.v), std::abs(a.u - b.u)});
  }
  out.residual = r;
  return out;
}

}  // namespace cavopt
