#include "cavopt/newton.hpp"

#include <cmath>
#include <limits>
#include <optional>

namespace cavopt {

namespace {

std::optional<Eigen::VectorXd> try_eval(const Residual& f, const Eigen::VectorXd& x) {
  try {
    Eigen::VectorXd r = f(x);
    if (!r.allFinite()) return std::nullopt;
    return r;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

}  // namespace

NewtonResult damped_newton(const Residual& f, Eigen::VectorXd x0, const NewtonOptions& opt) {
  NewtonResult res;
  res.x = std::move(x0);
  auto r0 = try_eval(f, res.x);
  if (!r0) {
    res.residual = std::numeric_limits<double>::infinity();
    return res;
  }
  Eigen::VectorXd r = *r0;
  res.residual = r.lpNorm<Eigen::Infinity>();

  const auto n = res.x.size();
  for (int it = 0; it < opt.max_iter; ++it) {
    if (res.residual <= opt.tol) {
      res.converged = true;
      return res;
    }
    Eigen::MatrixXd jac(r.size(), n);
    bool jac_ok = true;
    for (Eigen::Index j = 0; j < n && jac_ok; ++j) {
      const double h = opt.fd_step * std::max(1.0, std::abs(res.x[j]));
      Eigen::VectorXd xp = res.x;
      xp[j] += h;
      auto rp = try_eval(f, xp);
      if (!rp) {
        xp[j] = res.x[j] - h;
        rp = try_eval(f, xp);
        if (!rp) {
          jac_ok = false;
          break;
        }
        jac.col(j) = (r - *rp) / h;
      } else {
        jac.col(j) = (*rp - r) / h;
      }
    }
    if (!jac_ok) break;

    const Eigen::VectorXd step = jac.colPivHouseholderQr().solve(-r);
    if (!step.allFinite()) break;

    const double phi0 = 0.5 * r.squaredNorm();
    double lambda = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      const Eigen::VectorXd xt = res.x + lambda * step;
      auto rt = try_eval(f, xt);
      if (rt && 0.5 * rt->squaredNorm() <= (1.0 - 1e-4 * lambda) * phi0) {
        res.x = xt;
        r = *rt;
        accepted = true;
        break;
      }
      lambda *= 0.5;
    }
    res.iterations = it + 1;
    if (!accepted) break;
    res.residual = r.lpNorm<Eigen::Infinity>();
  }
  res.converged = res.residual <= opt.tol;
  return res;
}

NewtonResult multi_start_newton(const Residual& f, const std::vector<Eigen::VectorXd>& starts,
                                const NewtonOptions& opt,
                                const std::function<bool(const Eigen::VectorXd&)>& accept) {
  NewtonResult best;
  best.residual = std::numeric_limits<double>::infinity();
  int total = 0;
  for (const auto& s : starts) {
    NewtonResult r = damped_newton(f, s, opt);
    total += r.iterations;
    if (r.converged && (!accept || accept(r.x))) {
      r.iterations = total;
      return r;
    }
    if (r.residual < best.residual) best = r;
  }
  best.iterations = total;
  best.converged = false;
  return best;
}

std::vector<double> bracket_roots(const std::function<double(double)>& g, double lo, double hi,
                                  int n, double xtol) {
  auto safe = [&](double x) -> std::optional<double> {
    try {
      const double y = g(x);
      if (std::isfinite(y)) return y;
    } catch (const std::exception&) {
    }
    return std::nullopt;
  };
  std::vector<double> roots;
  auto refine = [&](double a, double b, double fa) {
    for (int it = 0; it < 200 && std::abs(b - a) > xtol * std::max(1.0, std::abs(b)); ++it) {
      const double m = 0.5 * (a + b);
      const auto fm = safe(m);
      if (!fm) return;
      if (*fm == 0.0) {
        a = b = m;
        break;
      }
      if ((*fm < 0.0) == (fa < 0.0)) {
        a = m;
        fa = *fm;
      } else {
        b = m;
      }
    }
    roots.push_back(0.5 * (a + b));
  };
  // Last valid point next to the edge of the valid region between a and b.
  auto edge = [&](double valid, double invalid) -> std::pair<double, std::optional<double>> {
    std::optional<double> fv = safe(valid);
    for (int it = 0; it < 60; ++it) {
      const double m = 0.5 * (valid + invalid);
      if (const auto fm = safe(m)) {
        valid = m;
        fv = fm;
      } else {
        invalid = m;
      }
    }
    return {valid, fv};
  };
  auto changes = [](double a, double b) { return a != 0.0 && (a < 0.0) != (b < 0.0); };

  std::optional<double> prev;
  double prev_x = lo;
  for (int k = 0; k <= n; ++k) {
    const double x = lo + (hi - lo) * static_cast<double>(k) / n;
    const auto y = safe(x);
    if (y && *y == 0.0) {
      roots.push_back(x);
    } else if (y && prev && changes(*prev, *y)) {
      refine(prev_x, x, *prev);
    } else if (k > 0 && prev && !y) {
      // Leaving the valid region: a root may sit just before its edge.
      const auto [ex, ey] = edge(prev_x, x);
      if (ey && *ey == 0.0) roots.push_back(ex);
      else if (ey && changes(*prev, *ey)) refine(prev_x, ex, *prev);
    } else if (k > 0 && !prev && y) {
      const auto [ex, ey] = edge(x, prev_x);
      if (ey && *ey == 0.0) roots.push_back(ex);
      else if (ey && changes(*ey, *y)) refine(ex, x, *ey);
    }
    prev = y;
    prev_x = x;
  }
  return roots;
}

double brent_minimize(const std::function<double(double)>& f, double lo, double hi, double xtol,
                      int max_iter) {
  const double golden = 0.3819660112501051;
  double a = lo, b = hi;
  double x = a + golden * (b - a), w = x, v = x;
  double fx = f(x), fw = fx, fv = fx;
  double d = 0.0, e = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    const double m = 0.5 * (a + b);
    const double tol1 = xtol * std::abs(x) + 1e-14;
    const double tol2 = 2.0 * tol1;
    if (std::abs(x - m) <= tol2 - 0.5 * (b - a)) break;
    bool parabolic = false;
    if (std::abs(e) > tol1) {
      double r = (x - w) * (fx - fv);
      double q = (x - v) * (fx - fw);
      double p = (x - v) * q - (x - w) * r;
      q = 2.0 * (q - r);
      if (q > 0.0) p = -p;
      q = std::abs(q);
      const double etemp = e;
      e = d;
      if (std::abs(p) < std::abs(0.5 * q * etemp) && p > q * (a - x) && p < q * (b - x)) {
        d = p / q;
        const double u = x + d;
        if (u - a < tol2 || b - u < tol2) d = (m > x) ? tol1 : -tol1;
        parabolic = true;
      }
    }
    if (!parabolic) {
      e = (x >= m) ? a - x : b - x;
      d = golden * e;
    }
    const double u = (std::abs(d) >= tol1) ? x + d : x + (d > 0 ? tol1 : -tol1);
    const double fu = f(u);
    if (fu <= fx) {
      (u >= x ? a : b) = x;
      v = w; fv = fw;
      w = x; fw = fx;
      x = u; fx = fu;
    } else {
      (u < x ? a : b) = u;
      if (fu <= fw || w == x) {
        v = w; fv = fw;
        w = u; fw = fu;
      } else if (fu <= fv || v == x || v == w) {
        v = u; fv = fu;
      }
    }
  }
  return x;
}

}  // namespace cavopt
