// Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

#include "cavopt/simulation.hpp"
#include "support.hpp"

using namespace cavopt;
using namespace testsupport;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

struct Verdict {
  bool pass = true;
  std::string detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
  void note(const std::string& s) { detail += (detail.empty() ? "" : "; ") + s; }
};

std::string fmt(const char* f, double x) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

double max_junction_gap(const PiecewiseTrajectory& tr) {
  double worst = 0.0;
  for (double t : tr.breakpoints()) {
    const State a = tr.eval_left(t), b = tr.eval(t);
    worst = std::max({worst, std::abs(a.p - b.p), std::abs(a.v - b.v), std::abs(a.u - b.u)});
  }
  return worst;
}

/// Largest excess of v over v_max and u over u_max, from 1 ms samples and extrema.
std::pair<double, double> upper_excess(const PiecewiseTrajectory& tr, const ScenarioConfig& cfg) {
  double dv = -INFINITY, du = -INFINITY;
  auto at = [&](const State& s) {
    dv = std::max(dv, s.v - cfg.v_max);
    du = std::max(du, s.u - cfg.u_max);
  };
  for (double t = tr.t0(); t <= tr.tf(); t += 1e-3) at(tr.eval(t));
  for (const auto& arc : tr.arcs()) {
    at(arc.state(arc.t_start()));
    at(arc.state(arc.t_end()));
    const auto ex = arc_extrema(arc);
    for (const auto& [t, v] : ex.speed) at(arc.state(t));
    for (const auto& [t, u] : ex.control) at(arc.state(t));
  }
  return {dv, du};
}

Verdict criterion1() {
  Verdict v;
  const ScenarioConfig cfg;
  const auto start = Clock::now();
  const auto r = solve_all({car(1, 0.0, 10.0)}, cfg);
  const double secs = seconds_since(start);
  const auto& rep = r[0].result.report;
  v.require(rep.feasible, "not solved");
  const double tf = r[0].result.traj.tf();
  v.require(std::abs(tf - 32.03) <= 0.05, "tf off");
  v.require(secs < 0.1, "too slow");
  v.note(fmt("tf=%.6f s", tf));
  v.note(fmt("runtime %.4f s", secs));
  return v;
}

Verdict criterion2() {
  Verdict v;
  const ScenarioConfig cfg;
  const auto s = solve_p1_fixed(0.0, 10.0, 33.0, cfg);
  const double res = p1_linear_residual(0.0, 10.0, 33.0, s.params, cfg.travel_distance());
  const double p = s.traj.eval(33.0).p;
  v.require(res <= 1e-12, "residual too large");
  v.require(std::abs(p - 400.0) <= 1e-8, "terminal position off");
  v.note(fmt("residual %.2e", res));
  v.note(fmt("p(33)-400=%.2e", p - 400.0));
  return v;
}

Verdict criterion3() {
  Verdict v;
  const ScenarioConfig cfg;
  const auto r = solve_all({car(1, 0.0, 10.0, "NS", 39.0), car(2, 2.0, 12.0)}, cfg);
  if (r.size() != 2 || !r[1].result.report.feasible) {
    v.require(false, "follower not solved");
    return v;
  }
  const auto& rep = r[1].result.report;
  const auto& tr = r[1].result.traj;
  const auto& leader = r[0].result.traj;
  v.require(rep.structure == "safety-no-exit", "structure " + rep.structure);
  const double tau = rep.safety ? rep.safety->tau : tr.t0();
  // Through the follower's arrival at the merging zone.
  const double tm = tr.time_at_position(cfg.L).value_or(tr.tf());
  double slack = 0.0, below = 0.0;
  for (int k = 0; k <= 20000; ++k) {
    const double t = tau + (tm - tau) * k / 20000.0;
    const State f = tr.eval(t);
    const double gap = leader.eval_extended(t).p - f.p - cfg.phi * f.v - cfg.delta0;
    slack = std::max(slack, std::abs(gap));
    below = std::min(below, gap);
  }
  double jump = 0.0;
  for (double t : tr.breakpoints()) jump = std::max(jump, u_jump(tr, t));
  v.require(slack <= 1e-6, "gap not tight on the constrained arc");
  v.require(below >= -1e-6, "gap violated");
  v.require(jump <= 1e-8, "control jump at entry");
  v.note(fmt("tau=%.4f s", tau));
  v.note(fmt("max |gap| on arc %.2e m", slack));
  v.note(fmt("u jump %.2e", jump));
  return v;
}

Verdict criterion4() {
  Verdict v;
  const ScenarioConfig cfg;
  const auto r = solve_all({car(1, 0.0, 10.0, "NS", 41.0), car(2, 1.5, 12.0, "NS", 42.5)}, cfg);
  if (r.size() != 2 || !r[1].result.report.feasible || !r[1].result.report.safety ||
      !r[1].result.report.safety->tau2) {
    v.require(false, "no entry/exit solution");
    return v;
  }
  const auto& sp = *r[1].result.report.safety;
  const double t1 = sp.tau, t2 = *sp.tau2;
  const auto& leader = r[0].result.traj;
  v.require(leader.terminal_speed() > 0.0, "leader");
  v.require(t1 < t2, "tau1 >= tau2");
  const double cont = max_junction_gap(r[1].result.traj);
  v.require(cont <= 1e-8, "continuity");

  const auto piece = safety_with_exit_at(1.5, 12.0, leader, t1, FixedTime{42.5}, cfg);
  double indep = INFINITY;
  if (piece) {
    if (const auto joint = safety_with_exit_joint(1.5, 12.0, leader, t1, FixedTime{42.5}, cfg, *piece)) {
      const auto& a = piece->params.pre;
      const auto& b = joint->params.pre;
      indep = std::max({std::abs(a.a - b.a), std::abs(a.b - b.b), std::abs(a.c - b.c),
                        std::abs(a.d - b.d), std::abs(piece->params.tau - joint->params.tau)});
    }
  }
  v.require(indep <= 1e-9, "pre-entry arc depends on the post-exit solve");
  v.note(fmt("tau1=%.4f", t1));
  v.note(fmt("tau2=%.4f", t2));
  v.note(fmt("continuity %.2e", cont));
  v.note(fmt("independence %.2e", indep));
  return v;
}

Verdict criterion5() {
  Verdict v;
  const ScenarioConfig cfg;
  const auto r = solve_all({car(1, 0.0, 10.0, "EW"), car(2, 2.0, 12.0, "NS", 34.4)}, cfg);
  if (r.size() != 2 || !r[1].result.report.feasible) {
    v.require(false, "follower not solved");
    return v;
  }
  const double tcf = r[0].result.traj.tf();
  const auto& tr = r[1].result.traj;
  const double dp = tr.eval(tcf).p - cfg.L;
  const double jump = u_jump(tr, tcf);
  v.require(std::abs(tcf - 32.027) < 5e-4, "conflicting exit time off");
  v.require(std::abs(dp) <= 1e-6, "not at the merging zone entry");
  v.require(jump <= 1e-8, "control jump");
  v.note(fmt("t_cf=%.6f", tcf));
  v.note(fmt("p(t_cf)-L=%.2e", dp));
  v.note(fmt("u jump %.2e", jump));
  return v;
}

Verdict criterion6() {
  Verdict v;
  ScenarioConfig cfg;
  cfg.v_max = 13.5;
  cfg.u_max = 0.2;
  const auto r = solve_all({car(1, 0.0, 10.0)}, cfg);
  const auto& rep = r[0].result.report;
  if (!rep.feasible || !rep.saturation || !rep.saturation->tau1 || !rep.saturation->tau2) {
    v.require(false, "no three-arc solution");
    return v;
  }
  const double t1 = *rep.saturation->tau1, t2 = *rep.saturation->tau2;
  const auto [dv, du] = upper_excess(r[0].result.traj, cfg);
  v.require(std::abs(t1 - 4.0) <= 0.2, "tau1 off");
  v.require(std::abs(t2 - 31.0) <= 0.5, "tau2 off");
  v.require(dv <= 1e-9, "speed above v_max");
  v.require(du <= 1e-9, "control above u_max");
  v.require(t2 - t1 > 0.0, "middle arc collapsed");
  v.note(fmt("tau1=%.6f", t1));
  v.note(fmt("tau2=%.6f", t2));
  v.note(fmt("max v-v_max %.1e", dv));
  v.note(fmt("max u-u_max %.1e", du));
  return v;
}

// Lemma checks on an unconstrained solve.
bool lemma_ok(const PiecewiseTrajectory& tr, const TerminalMode& mode, const ScenarioConfig& cfg) {
  const bool free = std::holds_alternative<FreeTime>(mode);
  const bool fixed = std::holds_alternative<FixedTime>(mode);
  const auto& arc = tr.arcs().front();
  const double a = arc.form().a;
  double umin = INFINITY, vmin = INFINITY;
  const double u0 = tr.eval(tr.t0()).u;
  double prev = u0;
  for (int k = 0; k <= 200; ++k) {
    const State s = tr.eval(tr.t0() + (tr.tf() - tr.t0()) * k / 200.0);
    umin = std::min(umin, s.u);
    vmin = std::min(vmin, s.v);
    if (fixed && (s.u * u0 < -1e-12 || (s.u - prev) * u0 > 1e-12)) return false;  // Lemma 3
    prev = s.u;
  }
  if (free) {
    if (a > 1e-12 || umin < -1e-9) return false;                   // Lemma 1
    if (vmin <= cfg.v_min || umin <= cfg.u_min) return false;      // Lemma 2
  }
  return true;
}

Verdict criterion7() {
  Verdict v;
  std::mt19937_64 rng(2024);
  const auto start = Clock::now();
  int solved = 0, infeasible = 0, skipped = 0, audits = 0, guarantee_fail = 0, lemma_fail = 0;
  std::string first_problem;
  for (int s = 0; s < 100; ++s) {
    Scenario sc;
    sc.name = "random";
    sc.config.rng_seed = static_cast<std::uint64_t>(s);
    sc.variants = {{"main", random_arrivals(rng)}};
    const auto res = simulate(sc);
    const auto& var = res.variants[0];
    if (!var.guarantees.passed()) {
      ++guarantee_fail;
      if (first_problem.empty()) first_problem = "scenario " + std::to_string(s) + " guarantees";
    }
    for (const auto& veh : var.vehicles) {
      if (veh.status == VehicleStatus::Infeasible) ++infeasible;
      if (veh.status == VehicleStatus::Skipped) ++skipped;
      if (veh.status != VehicleStatus::Solved) continue;
      ++solved;
      if (!veh.audit.passed()) {
        ++audits;
        if (first_problem.empty())
          first_problem = "scenario " + std::to_string(s) + " cav " +
                          std::to_string(veh.arrival.id) + " audit";
      }
      if (veh.report.structure == "unconstrained" &&
          !lemma_ok(veh.traj, veh.report.mode, effective_config(sc.config, veh.arrival))) {
        ++lemma_fail;
        if (first_problem.empty()) first_problem = "scenario " + std::to_string(s) + " lemma";
      }
    }
  }
  const double secs = seconds_since(start);
  v.require(audits == 0, std::to_string(audits) + " audit failures");
  v.require(guarantee_fail == 0, std::to_string(guarantee_fail) + " guarantee failures");
  v.require(lemma_fail == 0, std::to_string(lemma_fail) + " lemma failures");
  v.require(secs < 60.0, "over 60 s");
  if (!first_problem.empty()) v.note("first: " + first_problem);
  v.note(std::to_string(solved) + " solved, " + std::to_string(infeasible) + " infeasible, " +
         std::to_string(skipped) + " skipped");
  v.note(fmt("%.1f s", secs));
  return v;
}

struct Instance {
  PiecewiseTrajectory traj;
  double t0 = 0.0, v0 = 0.0;
  std::optional<double> tf;  // oracle horizon; free when empty
  QueueView view;
  ScenarioConfig cfg;
  double J = 0.0;
};

struct Case {
  std::string name;
  // Builds one instance from the generator, or nothing when the draw does not
  // produce the wanted structure.
  std::function<std::optional<Instance>(std::mt19937_64&)> draw;
};

std::optional<Instance> last_vehicle(const std::vector<VehicleArrival>& arrivals,
                                     const ScenarioConfig& cfg, const std::string& structure,
                                     bool oracle_fixed) {
  const auto r = solve_all(arrivals, cfg);
  if (r.size() != arrivals.size()) return std::nullopt;
  const auto& last = r.back();
  if (!last.result.report.feasible || last.result.report.structure != structure)
    return std::nullopt;
  Instance in;
  in.traj = last.result.traj;
  in.t0 = last.arrival.t0;
  in.v0 = last.arrival.v0;
  if (oracle_fixed) in.tf = in.traj.tf();
  in.view = last.view;
  in.cfg = effective_config(cfg, last.arrival);
  in.J = last.result.report.cost.J;
  return in;
}

std::vector<Case> oracle_cases() {
  using R = std::mt19937_64;
  auto U = [](R& g, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(g);
  };
  std::vector<Case> cases;
  cases.push_back({"unconstrained free", [U](R& g) {
                     ScenarioConfig cfg;
                     cfg.gamma = U(g, 0.05, 0.3);
                     return last_vehicle({car(1, 0.0, U(g, 8.0, 14.0))}, cfg, "unconstrained",
                                         false);
                   }});
  cases.push_back({"unconstrained fixed", [U](R& g) {
                     const ScenarioConfig cfg;
                     const double v0 = U(g, 8.0, 14.0);
                     const double tf = solve_p0_free(0.0, v0, cfg).params.tf + U(g, -2.0, 5.0);
                     return last_vehicle({car(1, 0.0, v0, "NS", tf)}, cfg, "unconstrained", true);
                   }});
  cases.push_back({"safety no exit", [U](R& g) {
                     const ScenarioConfig cfg;
                     return last_vehicle({car(1, 0.0, U(g, 9.5, 10.5), "NS", U(g, 38.0, 40.0)),
                                          car(2, U(g, 1.5, 2.5), U(g, 11.0, 13.0))},
                                         cfg, "safety-no-exit", true);
                   }});
  cases.push_back({"safety with exit", [U](R& g) {
                     const ScenarioConfig cfg;
                     const double tk = U(g, 40.5, 41.5);
                     return last_vehicle({car(1, 0.0, U(g, 9.8, 10.2), "NS", tk),
                                          car(2, U(g, 1.3, 1.7), U(g, 11.5, 12.5), "NS",
                                              tk + U(g, 1.3, 1.7))},
                                         cfg, "safety-with-exit", true);
                   }});
  cases.push_back({"lateral", [U](R& g) {
                     const ScenarioConfig cfg;
                     return last_vehicle({car(1, 0.0, U(g, 9.5, 10.5), "EW"),
                                          car(2, U(g, 1.5, 2.5), U(g, 11.0, 13.0), "NS",
                                              U(g, 34.0, 35.0))},
                                         cfg, "lateral", true);
                   }});
  cases.push_back({"saturation", [U](R& g) {
                     ScenarioConfig cfg;
                     cfg.v_max = U(g, 13.0, 14.0);
                     cfg.u_max = U(g, 0.15, 0.3);
                     return last_vehicle({car(1, 0.0, U(g, 9.0, 11.0))}, cfg, "saturation", false);
                   }});
  return cases;
}

Verdict criterion8() {
  Verdict v;
  const auto start = Clock::now();
  std::mt19937_64 rng(8);
  int total = 0;
  double worst_gap = -INFINITY, worst_abs = 0.0;
  std::vector<double> ratios;
  for (const auto& c : oracle_cases()) {
    int got = 0, draws = 0;
    double case_worst = -INFINITY;
    while (got < 25 && draws < 400) {
      ++draws;
      const auto in = c.draw(rng);
      if (!in) continue;
      ++got;
      const auto o = transcription_oracle(in->t0, in->v0, in->tf, in->view, in->cfg);
      const double gap = (in->J - o.J) / o.J;
      case_worst = std::max(case_worst, gap);
      worst_abs = std::max(worst_abs, std::abs(gap));
      if (!(gap <= 0.005)) v.require(false, c.name + fmt(" gap %.3e", gap));
      if (!o.feasible) v.require(false, c.name + " oracle infeasible");
      const double exact = cost(in->traj, in->cfg.gamma).J;
      const double e1 = std::abs(oracle_evaluate(in->traj, in->cfg, 0.01) - exact);
      const double e2 = std::abs(oracle_evaluate(in->traj, in->cfg, 0.005) - exact);
      if (e2 > 1e-13) ratios.push_back(e1 / e2);
      if (e1 > 1e-5) v.require(false, c.name + fmt(" evaluation error %.2e", e1));
    }
    total += got;
    worst_gap = std::max(worst_gap, case_worst);
    if (got < 25) v.require(false, c.name + " only " + std::to_string(got) + " instances");
    v.note(c.name + fmt(" worst %.2e", case_worst));
  }
  v.require(worst_abs <= 0.02, "oracle far from analytic");
  std::sort(ratios.begin(), ratios.end());
  const double median = ratios.empty() ? 0.0 : ratios[ratios.size() / 2];
  v.require(median > 3.0 && median < 5.0, "evaluation error not second order");
  v.note(std::to_string(total) + " instances");
  v.note(fmt("median error ratio dt/2: %.2f", median));
  v.note(fmt("%.1f s", seconds_since(start)));
  return v;
}

}  // namespace

int main() {
  std::setvbuf(stdout, nullptr, _IONBF, 0);
  const std::pair<const char*, Verdict (*)()> criteria[] = {
      {"1 unconstrained free terminal time", criterion1},
      {"2 fixed terminal time", criterion2},
      {"3 safety constraint without exit", criterion3},
      {"4 safety constraint with exit", criterion4},
      {"5 lateral interior point", criterion5},
      {"6 control and speed saturation", criterion6},
      {"7 random multi-vehicle property suite", criterion7},
      {"8 direct transcription oracle", criterion8},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("exception: ") + e.what();
    }
    std::printf("%s criterion %s: %s\n", v.pass ? "PASS" : "FAIL", name, v.detail.c_str());
    failed += v.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
