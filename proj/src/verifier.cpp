#include "cavopt/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

namespace cavopt {

bool AuditReport::passed() const {
  if (!structural_error.empty()) return false;
  for (const auto& m : checks)
    if (!m.pass()) return false;
  return !oracle || oracle->pass();
}

const Margin* AuditReport::find(const std::string& name) const {
  for (const auto& m : checks)
    if (m.name == name) return &m;
  return nullptr;
}

std::vector<std::string> AuditReport::failures() const {
  std::vector<std::string> out;
  if (!structural_error.empty()) out.push_back("structure: " + structural_error);
  for (const auto& m : checks)
    if (!m.pass()) out.push_back(m.name);
  if (oracle && !oracle->pass()) out.push_back("oracle");
  return out;
}

std::string AuditReport::to_text() const {
  std::ostringstream os;
  os << std::setprecision(6);
  if (!structural_error.empty()) {
    os << "structure FAIL " << structural_error << "\n";
    return os.str();
  }
  for (const auto& m : checks) {
    os << std::left << std::setw(14) << m.name;
    if (!m.applicable) {
      os << " n/a\n";
      continue;
    }
    os << " worst=" << m.value << " at t=" << m.t << " tol=" << m.tol
       << (m.pass() ? " PASS" : " FAIL") << "\n";
  }
  if (oracle)
    os << "oracle         analytic=" << oracle->analytic_J << " oracle=" << oracle->oracle_J
       << " gap=" << oracle->rel_gap << (oracle->pass() ? " PASS" : " FAIL") << "\n";
  return os.str();
}

namespace {

constexpr double kBoundTol = 1e-9;
constexpr double kGapTol = 1e-6;
constexpr double kContTol = 1e-8;
constexpr double kHamTol = 1e-8;
constexpr double kPosTol = 1e-8;
constexpr double kLatTol = 1e-6;
constexpr double kFifoTol = 1e-9;

void worsen(Margin& m, double value, double t) {
  if (value > m.value) {
    m.value = value;
    m.t = t;
  }
}

Margin margin(const std::string& name, double tol) {
  return {name, -std::numeric_limits<double>::infinity(), 0.0, tol, true};
}

std::vector<double> sample_times(const ArcSegment& arc, double step) {
  std::vector<double> ts{arc.t_start(), arc.t_end()};
  const auto n = static_cast<long>(std::floor(arc.duration() / step));
  for (long k = 1; k <= n; ++k) ts.push_back(arc.t_start() + step * static_cast<double>(k));
  const auto ex = arc_extrema(arc);
  for (const auto& e : ex.speed) ts.push_back(e.first);
  for (const auto& e : ex.control) ts.push_back(e.first);
  return ts;
}

bool is_cubic(const ArcSegment& a) { return a.kind() == ArcKind::CubicPosition; }

}  // namespace

AuditReport audit(const PiecewiseTrajectory& traj, const QueueView& view,
                  const ScenarioConfig& cfg, const AuditOptions& opt) {
  AuditReport rep;
  if (traj.arcs().empty()) {
    rep.structural_error = "trajectory has no arcs";
    return rep;
  }
  const auto& arcs = traj.arcs();
  const double t0 = traj.t0(), tf = traj.tf();
  const double D = cfg.travel_distance();

  Margin umax = margin("u_max", kBoundTol), umin = margin("u_min", kBoundTol);
  Margin vmax = margin("v_max", kBoundTol), vmin = margin("v_min", kBoundTol);
  for (const auto& arc : arcs) {
    for (double t : sample_times(arc, opt.sample_step)) {
      if (t < arc.t_start() || t > arc.t_end()) continue;
      const State s = arc.state(t);
      if (!std::isfinite(s.p) || !std::isfinite(s.v) || !std::isfinite(s.u)) {
        rep.structural_error = "non-finite state";
        return rep;
      }
      worsen(umax, s.u - cfg.u_max, t);
      worsen(umin, cfg.u_min - s.u, t);
      worsen(vmax, s.v - cfg.v_max, t);
      worsen(vmin, cfg.v_min - s.v, t);
    }
  }
  rep.checks.insert(rep.checks.end(), {umax, umin, vmax, vmin});

  Margin init = margin("initial", kPosTol);
  const State s0 = arcs.front().state(t0);
  worsen(init, std::abs(s0.p), t0);
  if (opt.v0) worsen(init, std::abs(s0.v - *opt.v0), t0);
  rep.checks.push_back(init);

  Margin term = margin("terminal", kPosTol);
  worsen(term, std::abs(arcs.back().state(tf).p - D), tf);
  rep.checks.push_back(term);

  Margin cp = margin("continuity_p", kContTol), cv = margin("continuity_v", kContTol),
         cu = margin("continuity_u", kContTol);
  worsen(cp, 0.0, t0);
  worsen(cv, 0.0, t0);
  worsen(cu, 0.0, t0);
  for (std::size_t k = 0; k + 1 < arcs.size(); ++k) {
    const double t = arcs[k].t_end();
    const State l = arcs[k].state(t), r = arcs[k + 1].state(arcs[k + 1].t_start());
    worsen(cp, std::abs(l.p - r.p), t);
    worsen(cv, std::abs(l.v - r.v), t);
    // A saturated arc may hand over to a cruise with a control jump.
    const bool jump_ok = arcs[k].kind() == ArcKind::SaturatedControl &&
                         arcs[k + 1].kind() == ArcKind::Cruise;
    if (!jump_ok) worsen(cu, std::abs(l.u - r.u), t);
  }
  rep.checks.insert(rep.checks.end(), {cp, cv, cu});

  Margin ham = margin("hamiltonian", kHamTol);
  for (const auto& arc : arcs) {
    if (!is_cubic(arc)) continue;
    const double a = arc.form().a;
    for (int k = 0; k <= 100; ++k) {
      const double t = arc.t_start() + arc.duration() * k / 100.0;
      const State s = arc.state(t);
      const double H = cfg.gamma - 0.5 * s.u * s.u + a * s.v;
      rep.hamiltonian.emplace_back(t, H);
      if (&arc == &arcs.back()) worsen(ham, std::abs(H), t);
    }
  }
  ham.applicable = opt.free_tf && is_cubic(arcs.back());
  if (!ham.applicable) ham.value = 0.0;
  rep.checks.push_back(ham);

  Margin gap = margin("gap", kGapTol);
  gap.applicable = false;
  gap.value = 0.0;
  if (view.k && view.k->traj) {
    const auto& lk = *view.k->traj;
    gap.applicable = true;
    gap.value = -std::numeric_limits<double>::infinity();
    const double start = std::max(t0, lk.t0());
    for (const auto& arc : arcs)
      for (double t : sample_times(arc, opt.sample_step)) {
        if (t < start || t < arc.t_start() || t > arc.t_end()) continue;
        const State s = arc.state(t), k = lk.eval_extended(t);
        worsen(gap, s.p + cfg.phi * s.v + cfg.delta0 - k.p, t);
      }
    if (!std::isfinite(gap.value)) gap.value = 0.0;
  }
  rep.checks.push_back(gap);

  Margin lat = margin("lateral", kLatTol);
  lat.applicable = false;
  lat.value = 0.0;
  if (view.c && view.c->traj) {
    const double tcf = view.c->traj->tf();
    if (tcf > t0) {
      lat.applicable = true;
      lat.value = traj.eval_extended(tcf).p - cfg.L;
      lat.t = tcf;
    }
  }
  rep.checks.push_back(lat);

  Margin fifo = margin("fifo", kFifoTol);
  for (const auto* p : {&view.k, &view.c, &view.o})
    if (*p && (*p)->traj) worsen(fifo, (*p)->traj->tf() - tf, tf);
  if (!std::isfinite(fifo.value)) {
    fifo.applicable = false;
    fifo.value = 0.0;
  }
  rep.checks.push_back(fifo);
  return rep;
}

}  // namespace cavopt
