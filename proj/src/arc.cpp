#include "cavopt/arc.hpp"

#include <algorithm>
#include <cmath>

#include "cavopt/model.hpp"

namespace cavopt {

double Poly::operator()(double t) const {
  double r = 0.0;
  for (auto it = c_.rbegin(); it != c_.rend(); ++it) r = r * t + *it;
  return r;
}

Poly Poly::derivative() const {
  if (c_.size() <= 1) return Poly{};
  std::vector<double> d(c_.size() - 1);
  for (std::size_t k = 1; k < c_.size(); ++k) d[k - 1] = c_[k] * static_cast<double>(k);
  return Poly(std::move(d));
}

Poly Poly::antiderivative() const {
  if (c_.empty()) return Poly{};
  std::vector<double> d(c_.size() + 1, 0.0);
  for (std::size_t k = 0; k < c_.size(); ++k) d[k + 1] = c_[k] / static_cast<double>(k + 1);
  return Poly(std::move(d));
}

Poly Poly::operator+(const Poly& o) const {
  std::vector<double> r(std::max(c_.size(), o.c_.size()), 0.0);
  for (std::size_t k = 0; k < r.size(); ++k) r[k] = coeff(k) + o.coeff(k);
  return Poly(std::move(r));
}

Poly Poly::operator*(const Poly& o) const {
  if (c_.empty() || o.c_.empty()) return Poly{};
  std::vector<double> r(c_.size() + o.c_.size() - 1, 0.0);
  for (std::size_t i = 0; i < c_.size(); ++i)
    for (std::size_t j = 0; j < o.c_.size(); ++j) r[i + j] += c_[i] * o.c_[j];
  return Poly(std::move(r));
}

Poly Poly::operator*(double s) const {
  std::vector<double> r = c_;
  for (auto& x : r) x *= s;
  return Poly(std::move(r));
}

namespace {

// Solves (D - 1/phi) Y = X for the polynomial Y:  Y = -phi * sum_k (phi D)^k X.
Poly integrate_against_decay(const Poly& x, double phi) {
  if (x.empty()) return Poly{};
  Poly acc;
  Poly term = x;
  double scale = 1.0;
  while (!term.empty()) {
    acc = acc + term * scale;
    term = term.derivative();
    scale *= phi;
  }
  return acc * (-phi);
}

// Integral over [t1, t2] of R(t) e^{beta t}.
double exp_poly_integral(const Poly& r, double beta, double t1, double t2) {
  if (r.empty()) return 0.0;
  auto primitive = [&](double t) {
    double s = 0.0;
    Poly dk = r;
    double sign = 1.0;
    double bpow = beta;
    while (!dk.empty()) {
      s += sign * dk(t) / bpow;
      dk = dk.derivative();
      sign = -sign;
      bpow *= beta;
    }
    return std::exp(beta * t) * s;
  };
  return primitive(t2) - primitive(t1);
}

}  // namespace

PolyExp::PolyExp(double a_, double b_, double c_, double d_, Poly q_, double phi_)
    : a(a_), b(b_), c(c_), d(d_), q(std::move(q_)), phi(phi_) {
  if (!q.empty()) {
    if (!(phi > 0.0)) throw DomainError("exponential arc needs phi > 0");
    vq_ = integrate_against_decay(q, phi);
    pq_ = integrate_against_decay(vq_, phi);
  }
}

State PolyExp::state(double t) const {
  State s;
  s.u = a * t + b;
  s.v = (0.5 * a * t + b) * t + c;
  s.p = ((a / 6.0 * t + 0.5 * b) * t + c) * t + d;
  if (!q.empty()) {
    const double e = std::exp(-t / phi);
    s.u += q(t) * e;
    s.v += vq_(t) * e;
    s.p += pq_(t) * e;
  }
  return s;
}

double PolyExp::jerk(double t) const {
  double j = a;
  if (!q.empty()) j += (q.derivative()(t) - q(t) / phi) * std::exp(-t / phi);
  return j;
}

double PolyExp::energy(double t1, double t2) const {
  const double h = t2 - t1;
  const double l1 = a * t1 + b;
  double e = 0.5 * (l1 * l1 * h + l1 * a * h * h + a * a * h * h * h / 3.0);
  if (!q.empty()) {
    const double beta = -1.0 / phi;
    const Poly lin({b, a});
    e += exp_poly_integral(lin * q, beta, t1, t2);
    e += 0.5 * exp_poly_integral(q * q, 2.0 * beta, t1, t2);
  }
  return e;
}

const char* to_string(ArcKind k) {
  switch (k) {
    case ArcKind::CubicPosition: return "cubic";
    case ArcKind::ExponentialTracking: return "tracking";
    case ArcKind::SaturatedControl: return "saturated";
    case ArcKind::Cruise: return "cruise";
  }
  return "?";
}

ArcSegment::ArcSegment(Params p, PolyExp f, double ts, double te)
    : params_(std::move(p)), form_(std::move(f)), t_start_(ts), t_end_(te) {
  if (!(std::isfinite(ts) && std::isfinite(te) && ts < te))
    throw StructureError("arc window must satisfy t_start < t_end");
}

ArcSegment ArcSegment::cubic(double a, double b, double c, double d, double ts, double te) {
  return ArcSegment(CubicPosition{a, b, c, d}, PolyExp(a, b, c, d), ts, te);
}

ArcSegment ArcSegment::tracking(double a_k, double b_k, double c_k, double d_k,
                                std::vector<double> ce, double phi, double ts, double te) {
  PolyExp f(a_k, b_k, c_k, d_k, Poly(ce), phi);
  return ArcSegment(ExponentialTracking{a_k, b_k, c_k, d_k, std::move(ce), phi}, std::move(f),
                    ts, te);
}

ArcSegment ArcSegment::saturated(double u, double v_start, double p_start, double ts,
                                 double te) {
  PolyExp f(0.0, u, v_start - u * ts, p_start - v_start * ts + 0.5 * u * ts * ts);
  return ArcSegment(SaturatedControl{u, v_start, p_start}, f, ts, te);
}

ArcSegment ArcSegment::cruise(double v, double p_start, double ts, double te) {
  return ArcSegment(Cruise{v, p_start}, PolyExp(0.0, 0.0, v, p_start - v * ts), ts, te);
}

ArcSegment ArcSegment::from_form(const PolyExp& f, double ts, double te) {
  if (!f.has_exponential()) return cubic(f.a, f.b, f.c, f.d, ts, te);
  return tracking(f.a, f.b, f.c, f.d, f.q.coeffs(), f.phi, ts, te);
}

ArcKind ArcSegment::kind() const {
  return std::visit(
      [](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, CubicPosition>) return ArcKind::CubicPosition;
        else if constexpr (std::is_same_v<T, ExponentialTracking>) return ArcKind::ExponentialTracking;
        else if constexpr (std::is_same_v<T, SaturatedControl>) return ArcKind::SaturatedControl;
        else return ArcKind::Cruise;
      },
      params_);
}

State ArcSegment::state(double t) const {
  // Saturated and cruise arcs evaluate in local time to avoid cancellation.
  if (const auto* s = std::get_if<SaturatedControl>(&params_)) {
    const double h = t - t_start_;
    return {s->p_start + s->v_start * h + 0.5 * s->u_const * h * h, s->v_start + s->u_const * h,
            s->u_const};
  }
  if (const auto* c = std::get_if<Cruise>(&params_)) {
    return {c->p_start + c->v_const * (t - t_start_), c->v_const, 0.0};
  }
  return form_.state(t);
}

double ArcSegment::jerk(double t) const { return form_.jerk(t); }

ArcSegment ArcSegment::with_window(double ts, double te) const {
  if (const auto* s = std::get_if<SaturatedControl>(&params_)) {
    const State st = state(ts);
    return saturated(s->u_const, st.v, st.p, ts, te);
  }
  if (const auto* c = std::get_if<Cruise>(&params_)) return cruise(c->v_const, state(ts).p, ts, te);
  return ArcSegment(params_, form_, ts, te);
}

namespace {

std::vector<double> sign_change_roots(const auto& f, double t0, double t1) {
  constexpr int kSamples = 64;
  std::vector<double> roots;
  double prev_t = t0;
  double prev_f = f(t0);
  for (int k = 1; k <= kSamples; ++k) {
    const double t = t0 + (t1 - t0) * k / kSamples;
    const double ft = f(t);
    if ((prev_f < 0.0 && ft > 0.0) || (prev_f > 0.0 && ft < 0.0)) {
      double lo = prev_t, hi = t, flo = prev_f;
      for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, std::abs(hi)); ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if ((fm < 0.0) == (flo < 0.0)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      const double r = 0.5 * (lo + hi);
      if (r > t0 && r < t1) roots.push_back(r);
    }
    prev_t = t;
    prev_f = ft;
  }
  return roots;
}

}  // namespace

ArcExtrema arc_extrema(const ArcSegment& arc) {
  ArcExtrema out;
  const double t0 = arc.t_start();
  const double t1 = arc.t_end();
  switch (arc.kind()) {
    case ArcKind::SaturatedControl:
    case ArcKind::Cruise:
      return out;
    case ArcKind::CubicPosition: {
      const auto& f = arc.form();
      if (f.a != 0.0) {
        const double t = -f.b / f.a;
        if (t > t0 && t < t1) out.speed.emplace_back(t, arc.state(t).v);
      }
      return out;
    }
    case ArcKind::ExponentialTracking: {
      for (double t : sign_change_roots([&](double t) { return arc.state(t).u; }, t0, t1))
        out.speed.emplace_back(t, arc.state(t).v);
      for (double t : sign_change_roots([&](double t) { return arc.jerk(t); }, t0, t1))
        out.control.emplace_back(t, arc.state(t).u);
      return out;
    }
  }
  return out;
}

}  // namespace cavopt
