#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "cavopt/solver.hpp"
#include "solver_util.hpp"

namespace cavopt {

const char* to_string(ConstraintKind k) {
  switch (k) {
    case ConstraintKind::Control: return "control";
    case ConstraintKind::Speed: return "speed";
    case ConstraintKind::RearEnd: return "rear-end";
    case ConstraintKind::Lateral: return "lateral";
  }
  return "?";
}

namespace {

constexpr double kBoundTol = 1e-9;
constexpr double kGapTol = 1e-7;
constexpr double kTimeTol = 1e-9;

int priority(ConstraintKind k) { return static_cast<int>(k); }

/// Earliest time on [points.front(), points.back()] where f exceeds tol.
/// f must be monotone between consecutive points.
std::optional<std::pair<double, double>> first_excess(const std::function<double(double)>& f,
                                                      std::vector<double> points, double tol) {
  std::sort(points.begin(), points.end());
  std::optional<double> first;
  double worst = -std::numeric_limits<double>::infinity();
  std::size_t idx = 0;
  for (std::size_t k = 0; k < points.size(); ++k) {
    const double y = f(points[k]);
    worst = std::max(worst, y);
    if (!first && y > tol) {
      first = points[k];
      idx = k;
    }
  }
  if (!first) return std::nullopt;
  if (idx > 0) {
    double lo = points[idx - 1], hi = points[idx];
    while (hi - lo > kTimeTol) {
      const double mid = 0.5 * (lo + hi);
      (f(mid) > tol ? hi : lo) = mid;
    }
    first = hi;
  }
  return std::make_pair(*first, worst);
}

void bound_violations(const PiecewiseTrajectory& traj, const ScenarioConfig& cfg,
                      std::vector<Violation>& out) {
  std::optional<Violation> ctrl, speed;
  auto note = [](std::optional<Violation>& slot, ConstraintKind kind, double t, double amount,
                 bool upper) {
    if (!slot || t < slot->t) slot = Violation{kind, t, amount, upper};
  };
  for (const auto& arc : traj.arcs()) {
    const auto ex = arc_extrema(arc);
    std::vector<double> up{arc.t_start(), arc.t_end()}, vp = up;
    for (const auto& [t, u] : ex.control) up.push_back(t);
    for (const auto& [t, v] : ex.speed) vp.push_back(t);
    auto check = [&](std::optional<Violation>& slot, ConstraintKind kind,
                     const std::vector<double>& pts, auto value, double lo, double hi) {
      if (auto r = first_excess([&](double t) { return value(t) - hi; }, pts, kBoundTol))
        note(slot, kind, r->first, r->second, true);
      if (auto r = first_excess([&](double t) { return lo - value(t); }, pts, kBoundTol))
        note(slot, kind, r->first, r->second, false);
    };
    check(ctrl, ConstraintKind::Control, up, [&](double t) { return arc.state(t).u; }, cfg.u_min,
          cfg.u_max);
    check(speed, ConstraintKind::Speed, vp, [&](double t) { return arc.state(t).v; }, cfg.v_min,
          cfg.v_max);
  }
  if (ctrl) out.push_back(*ctrl);
  if (speed) out.push_back(*speed);
}

}  // namespace

std::vector<Violation> find_violations(const PiecewiseTrajectory& traj, const QueueView& view,
                                       const ScenarioConfig& cfg) {
  std::vector<Violation> out;
  bound_violations(traj, cfg, out);
  const double t0 = traj.t0(), tf = traj.tf();

  if (view.k && view.k->traj) {
    const auto& lk = *view.k->traj;
    auto h = [&](double t) {
      return detail::headway_excess(traj.eval(std::clamp(t, t0, tf)), lk.eval_extended(t), cfg);
    };
    const double start = std::max(t0, lk.t0());
    std::vector<double> pts;
    const auto n = static_cast<long>(std::ceil((tf - start) / 1e-3));
    for (long s = 0; s <= n; ++s) pts.push_back(std::min(tf, start + 1e-3 * static_cast<double>(s)));
    if (auto r = first_excess(h, pts, kGapTol))
      out.push_back({ConstraintKind::RearEnd, r->first, r->second, true});
  }

  if (view.c && view.c->traj) {
    const double tcf = view.c->traj->tf();
    if (tcf > t0) {
      const double p = traj.eval_extended(tcf).p;
      if (p > cfg.L + kBoundTol) out.push_back({ConstraintKind::Lateral, tcf, p - cfg.L, true});
    }
  }

  std::sort(out.begin(), out.end(), [](const Violation& a, const Violation& b) {
    if (std::abs(a.t - b.t) > kTimeTol) return a.t < b.t;
    return priority(a.kind) < priority(b.kind);
  });
  return out;
}

namespace {

struct Candidate {
  PiecewiseTrajectory traj;
  ConstraintKind kind;
  std::string structure;
  TerminalMode mode;
  Cost cost;
  double residual = 0.0;
  int iterations = 0;
  bool extension = false;
  std::optional<SafetyArcParams> safety;
  std::optional<LateralSolution> lateral;
  std::optional<SaturationSolution> saturation;
  std::optional<double> eta;

  Candidate(PiecewiseTrajectory tr, ConstraintKind k, std::string st, TerminalMode m, Cost c,
            double res, int it = 0)
      : traj(std::move(tr)), kind(k), structure(std::move(st)), mode(m), cost(c), residual(res),
        iterations(it) {}
};

bool same_mode(const TerminalMode& a, const TerminalMode& b) {
  if (a.index() != b.index()) return false;
  if (const auto* x = std::get_if<FixedTime>(&a))
    return std::abs(x->tf - std::get<FixedTime>(b).tf) <= kTimeTol;
  if (const auto* x = std::get_if<FollowerTime>(&a)) {
    const auto& y = std::get<FollowerTime>(b);
    return x->tk_f == y.tk_f && x->vk_f == y.vk_f;
  }
  return true;
}

/// Mode required by the terminal-time bounds for a solution exiting at tf
/// with speed vf, or nullopt when the bounds already hold.
std::optional<TerminalMode> required_mode(double tf, double vf, const VehicleArrival& arrival,
                                          const QueueView& view, const ScenarioConfig& cfg,
                                          TerminalBounds* bounds_out) {
  const TerminalBounds tb = t_lower_composite(arrival, view, cfg, vf);
  if (bounds_out) *bounds_out = tb;
  if (tf < tb.t_lower_composite - kTimeTol) {
    if (tb.binding_term == BindingTerm::Follower)
      return FollowerTime{view.k->traj->tf(), view.k->traj->terminal_speed()};
    if (tb.binding_term == BindingTerm::OppositeOrAdjacent)
      return FixedTime{tb.t_lower_composite};
    // Below t_L the solution necessarily breaks a speed or control limit; the
    // activation loop replaces it with a saturated structure.
  }
  if (tb.t_U && tf > *tb.t_U + kTimeTol) return FixedTime{*tb.t_U};
  return std::nullopt;
}

}  // namespace

SolveResult algorithm1(const VehicleArrival& arrival, const QueueView& view,
                       const ScenarioConfig& cfg_in) {
  SolveResult res;
  SolveReport& rep = res.report;
  const ScenarioConfig cfg = effective_config(cfg_in, arrival);
  const double t0 = arrival.t0, v0 = arrival.v0;
  const bool scripted = arrival.tf_fixed.has_value();

  auto fail = [&](const std::string& msg) {
    rep.feasible = false;
    rep.message = msg;
    rep.history.push_back("infeasible: " + msg);
    return res;
  };

  try {
    cfg.validate();
    arrival.validate(cfg);
    const auto sc = t_lower_speed_control(t0, v0, cfg);
    rep.bounds = t_lower_composite(arrival, view, cfg, sc.vf_hypothesis);
    if (rep.bounds.t_U && rep.bounds.t_L > *rep.bounds.t_U + kTimeTol)
      return fail("t_L exceeds t_U");

    TerminalMode mode = scripted ? TerminalMode{FixedTime{*arrival.tf_fixed}} : FreeTime{};
    UnconstrainedSolution base = solve_unconstrained(t0, v0, mode, cfg);
    rep.history.push_back(scripted ? "P0 with " + describe(mode) : "P0");
    int problem = 0;  // index r of the current problem P_r

    if (!scripted) {
      bool settled = false;
      for (int r = 0; r < 10; ++r) {
        const auto next = required_mode(base.params.tf, base.traj.terminal_speed(), arrival,
                                        view, cfg, &rep.bounds);
        if (!next) {
          settled = true;
          break;
        }
        if (same_mode(*next, mode)) return fail("terminal-time bound cannot be met");
        mode = *next;
        base = solve_unconstrained(t0, v0, mode, cfg);
        rep.history.push_back("P" + std::to_string(++problem) + " " + describe(mode));
      }
      if (!settled) return fail("terminal-time fixed point did not settle in 10 rounds");
    }

    Candidate current(base.traj, ConstraintKind::Control, "unconstrained", mode,
                      cost(base.traj, cfg.gamma), base.residual, base.iterations);
    current.eta = base.eta;
    rep.unconstrained = base.params;

    // Solve one structure under a terminal mode, re-solving while the
    // terminal-time bounds push the mode around.
    auto solve_kind = [&](ConstraintKind kind, const Violation& v,
                          TerminalMode m) -> std::vector<Candidate> {
      std::vector<Candidate> out;
      for (int r = 0; r < 10; ++r) {
        std::vector<Candidate> got;
        try {
          switch (kind) {
            case ConstraintKind::Control:
            case ConstraintKind::Speed: {
              auto s = solve_umax_vmax(t0, v0, m, cfg, v.upper);
              Candidate c(s.traj, kind, s.collapsed ? "saturation-collapsed" : "saturation", m,
                          cost(s.traj, cfg.gamma), s.residual);
              c.extension = s.extension;
              c.saturation = s;
              got.push_back(std::move(c));
              break;
            }
            case ConstraintKind::RearEnd: {
              if (!view.k || !view.k->traj) break;
              const auto& lk = *view.k->traj;
              const auto* fixed = std::get_if<FixedTime>(&m);
              try {
                auto s = solve_safety_no_exit(t0, v0, lk, cfg);
                if (!fixed || std::abs(s.traj.tf() - fixed->tf) <= 1e-6) {
                  Candidate c(s.traj, kind, "safety-no-exit", m, s.cost, s.residual);
                  c.safety = s.params;
                  got.push_back(std::move(c));
                }
              } catch (const std::exception& e) {
                rep.history.push_back(std::string("  safety-no-exit rejected: ") + e.what());
              }
              try {
                auto s = solve_safety_with_exit(t0, v0, lk, m, cfg);
                Candidate c(s.traj, kind, "safety-with-exit", m, s.cost, s.residual);
                c.safety = s.params;
                c.extension = s.extension;
                got.push_back(std::move(c));
              } catch (const std::exception& e) {
                rep.history.push_back(std::string("  safety-with-exit rejected: ") + e.what());
              }
              break;
            }
            case ConstraintKind::Lateral: {
              if (!view.c || !view.c->traj) break;
              auto s = solve_lateral_interior(t0, v0, view.c->traj->tf(), m, cfg);
              Candidate c(s.traj, kind, "lateral", m, cost(s.traj, cfg.gamma), s.residual,
                          s.iterations);
              c.eta = s.eta;
              c.lateral = s;
              got.push_back(std::move(c));
              break;
            }
          }
        } catch (const std::exception& e) {
          rep.history.push_back(std::string("  ") + to_string(kind) + " structure failed: " +
                                e.what());
        }
        if (got.empty() || scripted) return got;
        // Structures whose exit breaks the terminal bounds are re-solved
        // under the mode the bounds call for.
        bool again = false;
        TerminalMode next_mode = m;
        for (auto& c : got) {
          const auto need = required_mode(c.traj.tf(), c.traj.terminal_speed(), arrival, view,
                                          cfg, nullptr);
          if (!need) {
            out.push_back(std::move(c));
          } else if (!same_mode(*need, m)) {
            again = true;
            next_mode = *need;
          }
        }
        if (!again || !out.empty()) return out;
        m = next_mode;
        rep.history.push_back(std::string("  ") + to_string(kind) + " re-solved with " +
                              describe(m));
      }
      return out;
    };

    std::vector<ConstraintKind> active;
    for (int round = 0; round < 10; ++round) {
      const auto viols = find_violations(current.traj, view, cfg);
      if (viols.empty()) {
        rep.feasible = true;
        rep.message = "ok";
        rep.structure = current.structure;
        rep.mode = current.mode;
        rep.active = active;
        rep.residual = current.residual;
        rep.newton_iterations += current.iterations;
        rep.extension = current.extension;
        rep.safety = current.safety;
        rep.lateral = current.lateral;
        rep.saturation = current.saturation;
        rep.multipliers.eta = current.eta;
        if (current.lateral) rep.multipliers.zeta = current.lateral->zeta;
        const auto& last = current.traj.arcs().back();
        rep.multipliers.lambda_p =
            last.kind() == ArcKind::Cruise && current.traj.arcs().size() > 1
                ? current.traj.arcs()[current.traj.arcs().size() - 2].form().a
                : last.form().a;
        rep.cost = cost(current.traj, cfg.gamma);
        rep.bounds = t_lower_composite(arrival, view, cfg, current.traj.terminal_speed());
        rep.rounds = round;
        res.traj = current.traj;
        return res;
      }
      const Violation& v = viols.front();
      std::ostringstream os;
      os << "P" << ++problem << ": activate " << to_string(v.kind) << " at t=" << v.t;
      rep.history.push_back(os.str());
      if (std::find(active.begin(), active.end(), v.kind) == active.end())
        active.push_back(v.kind);

      std::vector<Candidate> cands;
      for (auto kind : active) {
        // Bound kinds share one structure; solve it once with the newest direction.
        if ((kind == ConstraintKind::Control || kind == ConstraintKind::Speed) &&
            std::any_of(cands.begin(), cands.end(), [](const Candidate& c) {
              return c.kind == ConstraintKind::Control || c.kind == ConstraintKind::Speed;
            }))
          continue;
        Violation dir = v;
        if (kind != v.kind)
          for (const auto& w : viols)
            if (w.kind == kind) dir = w;
        for (auto& c : solve_kind(kind, dir, current.mode)) cands.push_back(std::move(c));
      }
      rep.newton_iterations += current.iterations;

      const Candidate* best = nullptr;
      for (const auto& c : cands)
        if (find_violations(c.traj, view, cfg).empty() && (!best || c.cost.J < best->cost.J))
          best = &c;
      if (!best)
        for (const auto& c : cands)
          if ((c.kind == v.kind || ((c.kind == ConstraintKind::Control ||
                                     c.kind == ConstraintKind::Speed) &&
                                    (v.kind == ConstraintKind::Control ||
                                     v.kind == ConstraintKind::Speed))) &&
              (!best || c.cost.J < best->cost.J))
            best = &c;
      if (!best) return fail("no convergent arc structure for the " +
                             std::string(to_string(v.kind)) + " constraint");
      current = *best;
    }
    return fail("constraint activation did not settle in 10 rounds");
  } catch (const std::exception& e) {
    return fail(e.what());
  }
}

}  // namespace cavopt
