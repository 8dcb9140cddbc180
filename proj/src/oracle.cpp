#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "cavopt/verifier.hpp"

namespace cavopt {

namespace {

/// One fixed-horizon discretized problem.
class Transcription {
 public:
  Transcription(double t0, double v0, double T, double dt, const QueueView& view,
                const ScenarioConfig& cfg)
      : t0_(t0), v0_(v0), T_(T), cfg_(cfg) {
    n_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(T / dt - 1e-9)));
    h_ = T / static_cast<double>(n_);
    g_.resize(n_);
    for (std::size_t j = 0; j < n_; ++j)
      g_[j] = h_ * h_ * (static_cast<double>(n_ - j) - 0.5);
    target_ = cfg.travel_distance() - v0 * T;
    if (view.k && view.k->traj) {
      lead_p_.resize(n_ + 1, -std::numeric_limits<double>::infinity());
      for (std::size_t k = 1; k <= n_; ++k) {
        const double t = t0 + h_ * static_cast<double>(k);
        if (t >= view.k->traj->t0()) lead_p_[k] = view.k->traj->eval_extended(t).p;
      }
    }
    if (view.c && view.c->traj && view.c->traj->tf() > t0) {
      t_cf_ = view.c->traj->tf();
      // p(t_cf) = v0 rel + c . u, kept as a half-space in the projection.
      const double rel = std::min(*t_cf_ - t0, T);
      auto cell = std::min(n_, static_cast<std::size_t>(std::floor(rel / h_)));
      const double off = rel - h_ * static_cast<double>(cell);
      lat_c_.assign(n_, 0.0);
      for (std::size_t j = 0; j < cell; ++j)
        lat_c_[j] = h_ * h_ * (static_cast<double>(cell - j) - 0.5) + off * h_;
      if (cell < n_) lat_c_[cell] = 0.5 * off * off;
      lat_d_ = cfg.L - v0 * rel;
    }
    lam_hi_.assign(n_ + 1, 0.0);
    lam_lo_.assign(n_ + 1, 0.0);
    lam_gap_.assign(n_ + 1, 0.0);
    gv_.assign(n_ + 1, 0.0);
    gp_.assign(n_ + 1, 0.0);
    v_.assign(n_ + 1, 0.0);
    p_.assign(n_ + 1, 0.0);
  }

  std::size_t size() const { return n_; }
  double step() const { return h_; }

  void rollout(const std::vector<double>& u) {
    v_[0] = v0_;
    p_[0] = 0.0;
    for (std::size_t k = 0; k < n_; ++k) {
      p_[k + 1] = p_[k] + v_[k] * h_ + 0.5 * u[k] * h_ * h_;
      v_[k + 1] = v_[k] + u[k] * h_;
    }
  }

  /// Merging-zone position at t_cf: cell index, offset, and value.
  double lateral_position(const std::vector<double>& u, std::size_t* cell, double* s) const {
    const double rel = *t_cf_ - t0_;
    auto j = static_cast<std::size_t>(std::floor(rel / h_));
    j = std::min(j, n_);
    const double off = rel - h_ * static_cast<double>(j);
    const double uj = j < n_ ? u[j] : 0.0;
    if (cell) *cell = j;
    if (s) *s = off;
    return p_[j] + v_[j] * off + 0.5 * uj * off * off;
  }

  /// Energy plus augmented-Lagrangian penalties, and the gradient when grad
  /// is non-null. Each inequality c <= 0 with multiplier lam and weight rho
  /// contributes (max(0, lam + rho c)^2 - lam^2) / (2 rho).
  double objective(const std::vector<double>& u, double w, std::vector<double>* grad) {
    rollout(u);
    double f = 0.0;
    for (double x : u) f += 0.5 * h_ * x * x;
    std::fill(gv_.begin(), gv_.end(), 0.0);
    std::fill(gp_.begin(), gp_.end(), 0.0);
    const double rho = 2.0 * w * h_;
    auto term = [&](double c, double lam, double r) {
      const double z = std::max(0.0, lam + r * c);
      f += (z * z - lam * lam) / (2.0 * r);
      return z;
    };
    for (std::size_t k = 1; k <= n_; ++k) {
      gv_[k] += term(v_[k] - cfg_.v_max, lam_hi_[k], rho);
      gv_[k] -= term(cfg_.v_min - v_[k], lam_lo_[k], rho);
      if (!lead_p_.empty()) {
        const double z = term(p_[k] + cfg_.phi * v_[k] + cfg_.delta0 - lead_p_[k], lam_gap_[k], rho);
        gp_[k] += z;
        gv_[k] += z * cfg_.phi;
      }
    }
    if (grad) {
      grad->resize(n_);
      // d/du_m = h sum_{k>m} gv_k + h^2 sum_{k>m} gp_k (k - m - 1/2)
      double sv = 0.0, sp = 0.0, skp = 0.0;
      for (std::size_t m = n_; m-- > 0;) {
        sv += gv_[m + 1];
        sp += gp_[m + 1];
        skp += static_cast<double>(m + 1) * gp_[m + 1];
        (*grad)[m] = h_ * u[m] + h_ * sv + h_ * h_ * (skp - (static_cast<double>(m) + 0.5) * sp);
      }
    }
    return f;
  }

  /// First-order multiplier update after a stage at weight w.
  void update_multipliers(const std::vector<double>& u, double w) {
    rollout(u);
    const double rho = 2.0 * w * h_;
    for (std::size_t k = 1; k <= n_; ++k) {
      lam_hi_[k] = std::max(0.0, lam_hi_[k] + rho * (v_[k] - cfg_.v_max));
      lam_lo_[k] = std::max(0.0, lam_lo_[k] + rho * (cfg_.v_min - v_[k]));
      if (!lead_p_.empty())
        lam_gap_[k] = std::max(
            0.0, lam_gap_[k] + rho * (p_[k] + cfg_.phi * v_[k] + cfg_.delta0 - lead_p_[k]));
    }
  }

  /// Projection onto {u_min <= u <= u_max, g.u = target}.
  void project(std::vector<double>& y) {
    if (lat_c_.empty()) {
      project_plane(y);
      return;
    }
    // Dual search on the half-space multiplier nu >= 0; c . x(nu) is
    // nonincreasing in nu.
    const std::vector<double> y0 = y;
    auto excess = [&](double nu) {
      for (std::size_t j = 0; j < n_; ++j) y[j] = y0[j] - nu * lat_c_[j];
      project_plane(y);
      double s = 0.0;
      for (std::size_t j = 0; j < n_; ++j) s += lat_c_[j] * y[j];
      return s - lat_d_;
    };
    double a = 0.0, fa = excess(0.0);
    if (fa <= 0.0) {
      nu_ = 0.0;
      return;
    }
    double b = std::max(nu_, 1e-3), fb = excess(b);
    for (int it = 0; fb > 0.0 && it < 200; ++it) {
      a = b;
      fa = fb;
      b *= 4.0;
      fb = excess(b);
    }
    if (fb > 0.0) return;  // empty intersection; violation reports it
    // Illinois false position.
    int side = 0;
    for (int it = 0; it < 100 && b - a > 1e-14 * b; ++it) {
      const double c = (a * fb - b * fa) / (fb - fa);
      const double fc = excess(c);
      if (std::abs(fc) <= 1e-13) {
        a = b = c;
        break;
      }
      if (fc > 0.0) {
        a = c;
        fa = fc;
        if (side == -1) fb *= 0.5;
        side = -1;
      } else {
        b = c;
        fb = fc;
        if (side == 1) fa *= 0.5;
        side = 1;
      }
    }
    nu_ = b;
    excess(b);
  }

  void project_plane(std::vector<double>& y) {
    const double lo = cfg_.u_min, hi = cfg_.u_max;
    auto value = [&](double mu, double* slope) {
      double s = 0.0, d = 0.0;
      for (std::size_t j = 0; j < n_; ++j) {
        const double x = y[j] + mu * g_[j];
        if (x <= lo) {
          s += g_[j] * lo;
        } else if (x >= hi) {
          s += g_[j] * hi;
        } else {
          s += g_[j] * x;
          d += g_[j] * g_[j];
        }
      }
      if (slope) *slope = d;
      return s - target_;
    };
    double mu_lo = std::numeric_limits<double>::infinity(), mu_hi = -mu_lo;
    for (std::size_t j = 0; j < n_; ++j) {
      mu_lo = std::min(mu_lo, (lo - y[j]) / g_[j]);
      mu_hi = std::max(mu_hi, (hi - y[j]) / g_[j]);
    }
    double mu = std::clamp(mu_, mu_lo, mu_hi);
    if (value(mu_lo, nullptr) >= 0.0) {
      mu = mu_lo;
    } else if (value(mu_hi, nullptr) <= 0.0) {
      mu = mu_hi;
    } else {
      double a = mu_lo, b = mu_hi;
      for (int it = 0; it < 100; ++it) {
        double d = 0.0;
        const double r = value(mu, &d);
        if (r == 0.0) break;
        (r < 0.0 ? a : b) = mu;
        double next = d > 0.0 ? mu - r / d : 0.5 * (a + b);
        if (!(next > a && next < b)) next = 0.5 * (a + b);
        if (std::abs(next - mu) <= 1e-15 * std::max(1.0, std::abs(mu))) {
          mu = next;
          break;
        }
        mu = next;
      }
    }
    mu_ = mu;
    for (std::size_t j = 0; j < n_; ++j) y[j] = std::clamp(y[j] + mu * g_[j], lo, hi);
  }

  /// Accelerated projected gradient with backtracking and adaptive restart.
  void minimize(std::vector<double>& u, double w, int iterations) {
    project(u);
    std::vector<double> x = u, y = u, gy(n_), xn(n_);
    double t = 1.0, L = lipschitz_;
    double fx = objective(x, w, nullptr);
    for (int it = 0; it < iterations; ++it) {
      const double fy = objective(y, w, &gy);
      for (;;) {
        for (std::size_t j = 0; j < n_; ++j) xn[j] = y[j] - gy[j] / L;
        project(xn);
        double lin = 0.0, quad = 0.0;
        for (std::size_t j = 0; j < n_; ++j) {
          const double d = xn[j] - y[j];
          lin += gy[j] * d;
          quad += d * d;
        }
        const double fn = objective(xn, w, nullptr);
        if (fn <= fy + lin + 0.5 * L * quad + 1e-15 * std::abs(fy) || L > 1e18) {
          const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
          if (fn > fx) {
            // Restart momentum.
            y = x;
            t = 1.0;
          } else {
            for (std::size_t j = 0; j < n_; ++j) y[j] = xn[j] + (t - 1.0) / tn * (xn[j] - x[j]);
            x.swap(xn);
            fx = fn;
            t = tn;
          }
          break;
        }
        L *= 2.0;
      }
      L *= 0.9;
    }
    lipschitz_ = L;
    u = x;
  }

  double energy(const std::vector<double>& u) const {
    double e = 0.0;
    for (double x : u) e += 0.5 * h_ * x * x;
    return e;
  }

  double violation(const std::vector<double>& u) {
    rollout(u);
    double worst = std::abs(p_[n_] - cfg_.travel_distance());
    for (std::size_t k = 1; k <= n_; ++k) {
      worst = std::max({worst, v_[k] - cfg_.v_max, cfg_.v_min - v_[k]});
      if (!lead_p_.empty())
        worst = std::max(worst, p_[k] + cfg_.phi * v_[k] + cfg_.delta0 - lead_p_[k]);
    }
    if (t_cf_) worst = std::max(worst, lateral_position(u, nullptr, nullptr) - cfg_.L);
    return std::max(worst, 0.0);
  }

  /// Control that reaches the terminal position at constant acceleration.
  std::vector<double> initial(std::mt19937_64& rng) {
    double gs = 0.0;
    for (double x : g_) gs += x;
    std::uniform_real_distribution<double> noise(-1e-3, 1e-3);
    std::vector<double> u(n_, target_ / gs);
    for (double& x : u) x += noise(rng);
    return u;
  }

  /// Resamples a control from another grid onto this one.
  std::vector<double> resample(const std::vector<double>& src) const {
    std::vector<double> u(n_);
    for (std::size_t j = 0; j < n_; ++j) {
      const double s = (static_cast<double>(j) + 0.5) / static_cast<double>(n_);
      const auto k = std::min(src.size() - 1, static_cast<std::size_t>(s * src.size()));
      u[j] = src[k];
    }
    return u;
  }

 private:
  double t0_, v0_, T_;
  const ScenarioConfig& cfg_;
  std::size_t n_ = 0;
  double h_ = 0.0;
  std::vector<double> g_;
  double target_ = 0.0;
  std::vector<double> lead_p_;
  std::optional<double> t_cf_;
  std::vector<double> lam_hi_, lam_lo_, lam_gap_;
  std::vector<double> lat_c_;
  double lat_d_ = 0.0, nu_ = 0.0;
  std::vector<double> gv_, gp_, v_, p_;
  double mu_ = 0.0;
  double lipschitz_ = 1.0;
};

struct Run {
  double penalized = 0.0;
  OracleResult result;
};

Run solve_horizon(double t0, double v0, double T, double dt, int iterations, const QueueView& view,
                  const ScenarioConfig& cfg, const OracleOptions& opt,
                  const std::vector<double>* warm) {
  Transcription tr(t0, v0, T, dt, view, cfg);
  std::mt19937_64 rng(opt.seed);
  std::vector<double> u = warm ? tr.resample(*warm) : tr.initial(rng);
  const int stages = std::max(1, opt.stages);
  const int per_stage = std::max(1, iterations / stages);
  double w = opt.initial_weight;
  for (int s = 0; s < stages; ++s) {
    tr.minimize(u, w, per_stage);
    if (s + 1 == stages) break;
    tr.update_multipliers(u, w);
    w *= 10.0;
  }
  Run run;
  run.penalized = cfg.gamma * T + tr.objective(u, w, nullptr);
  run.result.T = T;
  run.result.dt = tr.step();
  run.result.J = cfg.gamma * T + tr.energy(u);
  run.result.violation = tr.violation(u);
  run.result.feasible = run.result.violation <= 1e-3;
  run.result.u = std::move(u);
  return run;
}

}  // namespace

OracleResult transcription_oracle(double t0, double v0, std::optional<double> tf,
                                  const QueueView& view, const ScenarioConfig& cfg,
                                  const OracleOptions& opt) {
  const double dt = std::min(opt.dt, 0.01);
  if (tf) return solve_horizon(t0, v0, *tf - t0, dt, opt.iterations, view, cfg, opt, nullptr).result;

  // Free terminal time: golden section on a coarse grid, then one fine solve.
  const double D = cfg.travel_distance();
  double a = D / std::max(cfg.v_max, v0);
  double b = 3.0 * D / std::max(v0, 1.0);
  if (view.k && view.k->traj) b = std::max(b, view.k->traj->tf() - t0 + 3.0 * D / std::max(v0, 1.0));
  auto coarse = [&](double T) {
    return solve_horizon(t0, v0, T, opt.coarse_dt, opt.coarse_iterations, view, cfg, opt, nullptr);
  };
  // Scan first so the golden bracket holds the best basin.
  constexpr int kScan = 12;
  std::vector<double> ts, fs;
  for (int k = 0; k <= kScan; ++k) {
    ts.push_back(a + (b - a) * k / kScan);
    fs.push_back(coarse(ts.back()).penalized);
  }
  const auto best = static_cast<std::size_t>(std::min_element(fs.begin(), fs.end()) - fs.begin());
  a = ts[best > 0 ? best - 1 : 0];
  b = ts[std::min<std::size_t>(best + 1, kScan)];
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - r * (b - a), x2 = a + r * (b - a);
  Run r1 = coarse(x1), r2 = coarse(x2);
  while (b - a > 0.02) {
    if (r1.penalized < r2.penalized) {
      b = x2;
      x2 = x1;
      r2 = std::move(r1);
      x1 = b - r * (b - a);
      r1 = coarse(x1);
    } else {
      a = x1;
      x1 = x2;
      r1 = std::move(r2);
      x2 = a + r * (b - a);
      r2 = coarse(x2);
    }
  }
  const Run& c = r1.penalized < r2.penalized ? r1 : r2;
  return solve_horizon(t0, v0, c.result.T, dt, opt.iterations, view, cfg, opt, &c.result.u).result;
}

double oracle_evaluate(const PiecewiseTrajectory& traj, const ScenarioConfig& cfg, double dt) {
  const double T = traj.tf() - traj.t0();
  const auto n = std::max<long>(1, static_cast<long>(std::ceil(T / dt - 1e-9)));
  const double h = T / static_cast<double>(n);
  double e = 0.0;
  for (long k = 0; k < n; ++k) {
    const double u = traj.eval(traj.t0() + h * (static_cast<double>(k) + 0.5)).u;
    e += 0.5 * h * u * u;
  }
  return cfg.gamma * T + e;
}

}  // namespace cavopt
