#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Dense>
#include <unsupported/Eigen/Polynomials>

#include "cavopt/newton.hpp"
#include "cavopt/solver.hpp"
#include "solver_util.hpp"

namespace cavopt {

using detail::absolute_coeffs;
using detail::local_energy;

std::string describe(const TerminalMode& m) {
  std::ostringstream os;
  if (std::holds_alternative<FreeTime>(m)) {
    os << "free";
  } else if (const auto* f = std::get_if<FixedTime>(&m)) {
    os << "fixed(" << f->tf << ")";
  } else {
    const auto& g = std::get<FollowerTime>(m);
    os << "follower(" << g.tk_f << "," << g.vk_f << ")";
  }
  return os.str();
}

ArcSegment TerminalCubic::arc(double ts, double ps, double vs) const {
  const auto p = absolute_coeffs(ts, ps, vs, alpha, beta);
  return ArcSegment::cubic(p.a, p.b, p.c, p.d, ts, ts + T);
}

double TerminalCubic::energy() const { return local_energy(alpha, beta, T); }

namespace {

std::optional<TerminalCubic> terminal_free(double ps, double vs, const ScenarioConfig& cfg) {
  const double R = cfg.travel_distance() - ps;
  if (!(R > 0.0) || !(vs > 0.0)) return std::nullopt;
  TerminalCubic tc;
  if (cfg.gamma == 0.0) {
    tc.T = R / vs;
    return tc;
  }
  // With w = R/T the conditions u(tf) = 0 and H(tf) = 0 reduce to
  // 3 w^2 (w - vs)(3w - vs) = 2 gamma R^2, increasing in w for w >= vs.
  const double rhs = 2.0 * cfg.gamma * R * R;
  auto f = [&](double w) { return 3.0 * w * w * (w - vs) * (3.0 * w - vs) - rhs; };
  double lo = vs;
  double hi = 2.0 * vs;
  while (f(hi) < 0.0) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 4e-16 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  const double w = 0.5 * (lo + hi);
  tc.T = R / w;
  tc.alpha = -3.0 * (w - vs) / (tc.T * tc.T);
  tc.beta = -tc.alpha * tc.T;
  return tc;
}

std::optional<TerminalCubic> terminal_fixed(double ts, double ps, double vs, double tf,
                                            const ScenarioConfig& cfg) {
  const double T = tf - ts;
  if (!(T > 0.0)) return std::nullopt;
  TerminalCubic tc;
  tc.T = T;
  tc.alpha = 3.0 * (ps + vs * T - cfg.travel_distance()) / (T * T * T);
  tc.beta = -tc.alpha * T;
  return tc;
}

struct FollowerCandidate {
  TerminalCubic tc;
  double vf = 0.0;
};

std::optional<FollowerCandidate> follower_at(double ts, double ps, double vs, double T,
                                             const FollowerTime& m, const ScenarioConfig& cfg) {
  const double vf = (m.vk_f * (ts + T - m.tk_f) - cfg.delta0) / cfg.phi;
  const auto [alpha, beta] = detail::cubic_between(ps, vs, cfg.travel_distance(), vf, T);
  FollowerCandidate c;
  c.tc.T = T;
  c.tc.alpha = alpha;
  c.tc.beta = beta;
  c.tc.eta = (beta + alpha * T) / cfg.phi;
  c.vf = vf;
  return c;
}

std::optional<TerminalCubic> terminal_follower(double ts, double ps, double vs,
                                               const FollowerTime& m, const ScenarioConfig& cfg) {
  if (!(m.vk_f > 0.0)) throw InfeasibleError("leader exit speed must be positive");
  if (cfg.phi == 0.0) return terminal_fixed(ts, ps, vs, m.tk_f + cfg.delta0 / m.vk_f, cfg);
  if (!(cfg.travel_distance() > ps)) return std::nullopt;

  // Exit time where the exit speed would be zero, and a generous upper end.
  const double t_zero = m.tk_f + cfg.delta0 / m.vk_f;
  const double T_lo = std::max(t_zero - ts, 1e-3);
  const double v_hi = 3.0 * std::max({vs, m.vk_f, cfg.v_max}) + 10.0;
  const double T_hi = std::max(m.tk_f + (cfg.phi * v_hi + cfg.delta0) / m.vk_f - ts, 2.0 * T_lo);

  // Free-exit condition H(tf) + eta vk_f = 0 with eta = u(tf) / phi. Scaled
  // by T^4 it is a quartic in T with leading coefficient gamma + 2 (vk_f/phi)^2.
  const double A = (m.vk_f * (ts - m.tk_f) - cfg.delta0) / cfg.phi, B = m.vk_f / cfg.phi;
  const double dp = cfg.travel_distance() - ps, c0 = A - vs;
  const Poly e({-6.0 * dp, 4.0 * c0, 4.0 * B});  // u(tf) T^2
  const Poly f({-12.0 * dp, 6.0 * c0, 6.0 * B});  // alpha T^3
  const Poly T1({0.0, 1.0}), T2({0.0, 0.0, B}), vf({A, B});
  const Poly n = Poly({0.0, 0.0, 0.0, 0.0, cfg.gamma}) + e * e * -0.5 + f * T1 * vf + e * T2;
  const Poly dn = n.derivative();
  Eigen::VectorXd coeffs(5);
  for (int k = 0; k < 5; ++k) coeffs[k] = n.coeff(static_cast<std::size_t>(k));
  Eigen::PolynomialSolver<double, 4> ps4(coeffs);
  std::vector<double> roots;
  for (const auto& z : ps4.roots()) {
    if (std::abs(z.imag()) > 1e-6 * std::max(1.0, std::abs(z.real()))) continue;
    double T = z.real();
    for (int it = 0; it < 8; ++it) {
      const double d = dn(T);
      if (d == 0.0) break;
      T -= n(T) / d;
    }
    if (T > T_lo && T < T_hi) roots.push_back(T);
  }
  std::optional<TerminalCubic> best;
  double best_j = std::numeric_limits<double>::infinity();
  for (double T : roots) {
    const auto c = follower_at(ts, ps, vs, T, m, cfg);
    if (!(c->vf > 0.0)) continue;
    const double j = cfg.gamma * T + c->tc.energy();
    if (j < best_j) {
      best_j = j;
      best = c->tc;
    }
  }
  return best;
}

UnconstrainedParams params_of(const TerminalCubic& tc, double t0, double v0) {
  auto p = absolute_coeffs(t0, 0.0, v0, tc.alpha, tc.beta);
  p.tf = t0 + tc.T;
  return p;
}

PiecewiseTrajectory single_cubic(const UnconstrainedParams& p, double t0) {
  return PiecewiseTrajectory({ArcSegment::cubic(p.a, p.b, p.c, p.d, t0, p.tf)});
}

Eigen::VectorXd pack(const UnconstrainedParams& p) {
  Eigen::VectorXd x(5);
  x << p.a, p.b, p.c, p.d, p.tf;
  return x;
}

UnconstrainedParams unpack(const Eigen::VectorXd& x) {
  return {x[0], x[1], x[2], x[3], x[4]};
}

double pos(const UnconstrainedParams& p, double t) {
  return ((p.a / 6.0 * t + 0.5 * p.b) * t + p.c) * t + p.d;
}
double vel(const UnconstrainedParams& p, double t) { return (0.5 * p.a * t + p.b) * t + p.c; }

UnconstrainedSolution p1_follower_mode(double t0, double v0, const FollowerTime& m,
                                       const ScenarioConfig& cfg) {
  if (cfg.phi == 0.0) return solve_p1_fixed(t0, v0, m.tk_f + cfg.delta0 / m.vk_f, cfg);
  const auto tc = terminal_follower(t0, 0.0, v0, m, cfg);
  if (!tc) throw SolverError("follower exit conditions have no root");
  const double D = cfg.travel_distance();
  const UnconstrainedParams p0 = params_of(*tc, t0, v0);

  // Six conditions in (a, b, c, d, eta, tf).
  Residual f = [&](const Eigen::VectorXd& x) {
    const UnconstrainedParams p = {x[0], x[1], x[2], x[3], x[5]};
    const double eta = x[4];
    const double vf = vel(p, p.tf);
    Eigen::VectorXd r(6);
    r << pos(p, t0), vel(p, t0) - v0, pos(p, p.tf) - D, p.a * p.tf + p.b - eta * cfg.phi,
        cfg.gamma - 0.5 * p.b * p.b + p.a * p.c + eta * m.vk_f,
        m.vk_f * (p.tf - m.tk_f) - cfg.phi * vf - cfg.delta0;
    return r;
  };
  Eigen::VectorXd x0(6);
  x0 << p0.a, p0.b, p0.c, p0.d, *tc->eta, p0.tf;
  const NewtonResult nr = damped_newton(f, x0);
  if (!nr.converged) {
    std::ostringstream os;
    os << "follower system did not converge, residual " << nr.residual;
    throw SolverError(os.str());
  }
  UnconstrainedSolution s;
  s.params = {nr.x[0], nr.x[1], nr.x[2], nr.x[3], nr.x[5]};
  s.eta = nr.x[4];
  s.residual = nr.residual;
  s.iterations = nr.iterations;
  s.traj = single_cubic(s.params, t0);
  return s;
}

}  // namespace

std::optional<TerminalCubic> terminal_cubic(double ts, double ps, double vs,
                                            const TerminalMode& mode, const ScenarioConfig& cfg) {
  if (std::holds_alternative<FreeTime>(mode)) return terminal_free(ps, vs, cfg);
  if (const auto* f = std::get_if<FixedTime>(&mode)) return terminal_fixed(ts, ps, vs, f->tf, cfg);
  return terminal_follower(ts, ps, vs, std::get<FollowerTime>(mode), cfg);
}

UnconstrainedSolution solve_p0_free(double t0, double v0, const ScenarioConfig& cfg) {
  const double D = cfg.travel_distance();
  Residual f = [&](const Eigen::VectorXd& x) {
    const auto p = unpack(x);
    Eigen::VectorXd r(5);
    r << pos(p, t0), vel(p, t0) - v0, pos(p, p.tf) - D, p.a * p.tf + p.b,
        cfg.gamma - 0.5 * p.b * p.b + p.a * p.c;
    return r;
  };
  auto lemma1 = [&](const Eigen::VectorXd& x) {
    const auto p = unpack(x);
    return p.tf > t0 && p.a <= 1e-12 && p.a * t0 + p.b >= -1e-12;
  };

  // Start ladder: reduced closed form, cruise, then bang-type estimates.
  std::vector<Eigen::VectorXd> starts;
  if (const auto tc = terminal_free(0.0, v0, cfg)) starts.push_back(pack(params_of(*tc, t0, v0)));
  UnconstrainedParams cruise{0.0, 0.0, v0, -v0 * t0, t0 + D / v0};
  starts.push_back(pack(cruise));
  for (double scale : {0.9, 0.8, 0.7, 0.6, 0.5, 0.4}) {
    const double T = scale * D / v0;
    const auto [alpha, beta] = detail::cubic_between(0.0, v0, D, 2.0 * D / T - v0, T);
    auto p = absolute_coeffs(t0, 0.0, v0, alpha, beta);
    p.tf = t0 + T;
    starts.push_back(pack(p));
  }
  const NewtonResult nr = multi_start_newton(f, starts, {}, lemma1);
  if (!nr.converged) {
    std::ostringstream os;
    os << "free-time system did not converge to a root with u >= 0 nonincreasing; best residual "
       << nr.residual;
    throw SolverError(os.str());
  }
  UnconstrainedSolution s;
  s.params = unpack(nr.x);
  s.residual = nr.residual;
  s.iterations = nr.iterations;
  s.traj = single_cubic(s.params, t0);
  return s;
}

double p1_linear_residual(double t0, double v0, double tf, const UnconstrainedParams& p,
                          double D) {
  using LD = long double;
  auto prow = [](LD t, const UnconstrainedParams& q) {
    return ((LD(q.a) / 6 * t + LD(q.b) / 2) * t + LD(q.c)) * t + LD(q.d);
  };
  auto vrow = [](LD t, const UnconstrainedParams& q) {
    return (LD(q.a) / 2 * t + LD(q.b)) * t + LD(q.c);
  };
  const LD r[4] = {prow(t0, p), vrow(t0, p) - LD(v0), prow(tf, p) - LD(D),
                   LD(p.a) * LD(tf) + LD(p.b)};
  double m = 0.0;
  for (LD x : r) m = std::max(m, static_cast<double>(x < 0 ? -x : x));
  return m;
}

UnconstrainedSolution solve_p1_fixed(double t0, double v0, double tf, const ScenarioConfig& cfg) {
  if (!(tf - t0 > 1e-9)) throw SolverError("fixed terminal time must exceed entry time");
  const double D = cfg.travel_distance();
  Eigen::Matrix4d A;
  A << t0 * t0 * t0 / 6.0, t0 * t0 / 2.0, t0, 1.0,
       t0 * t0 / 2.0, t0, 1.0, 0.0,
       tf * tf * tf / 6.0, tf * tf / 2.0, tf, 1.0,
       tf, 1.0, 0.0, 0.0;
  Eigen::Vector4d rhs(0.0, v0, D, 0.0);
  const Eigen::FullPivLU<Eigen::Matrix4d> lu(A);
  if (!lu.isInvertible()) throw SolverError("fixed-time system is singular");
  Eigen::Vector4d x = lu.solve(rhs);

  // Iterative refinement with residuals in extended precision.
  for (int it = 0; it < 3; ++it) {
    Eigen::Vector4d r;
    for (int i = 0; i < 4; ++i) {
      long double acc = rhs[i];
      for (int j = 0; j < 4; ++j) acc -= static_cast<long double>(A(i, j)) * x[j];
      r[i] = static_cast<double>(acc);
    }
    x += lu.solve(r);
  }
  UnconstrainedSolution s;
  s.params = {x[0], x[1], x[2], x[3], tf};
  s.residual = p1_linear_residual(t0, v0, tf, s.params, D);
  s.traj = single_cubic(s.params, t0);
  return s;
}

UnconstrainedSolution solve_p1_follower(double t0, double v0, const PiecewiseTrajectory& leader,
                                        const ScenarioConfig& cfg) {
  return p1_follower_mode(t0, v0, FollowerTime{leader.tf(), leader.terminal_speed()}, cfg);
}

UnconstrainedSolution solve_unconstrained(double t0, double v0, const TerminalMode& mode,
                                          const ScenarioConfig& cfg) {
  if (std::holds_alternative<FreeTime>(mode)) return solve_p0_free(t0, v0, cfg);
  if (const auto* f = std::get_if<FixedTime>(&mode)) return solve_p1_fixed(t0, v0, f->tf, cfg);
  return p1_follower_mode(t0, v0, std::get<FollowerTime>(mode), cfg);
}

}  // namespace cavopt
