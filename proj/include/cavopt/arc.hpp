#pragma once

#include <cstddef>
#include <utility>
#include <variant>
#include <vector>

namespace cavopt {

/// Position, speed and control at one instant.
struct State {
  double p = 0.0;
  double v = 0.0;
  double u = 0.0;
};

/// Dense polynomial with ascending coefficients.
class Poly {
 public:
  Poly() = default;
  explicit Poly(std::vector<double> c) : c_(std::move(c)) {}

  double operator()(double t) const;
  Poly derivative() const;
  Poly antiderivative() const;  // zero constant term
  Poly operator+(const Poly& o) const;
  Poly operator*(const Poly& o) const;
  Poly operator*(double s) const;

  bool empty() const { return c_.empty(); }
  int degree() const { return static_cast<int>(c_.size()) - 1; }
  const std::vector<double>& coeffs() const { return c_; }
  double coeff(std::size_t k) const { return k < c_.size() ? c_[k] : 0.0; }

 private:
  std::vector<double> c_;
};

/// Closed-form arc in absolute time:
///   u(t) = a t + b + Q(t) e^{-t/phi}
///   v(t) = a t^2/2 + b t + c + V(t) e^{-t/phi}
///   p(t) = a t^3/6 + b t^2/2 + c t + d + P(t) e^{-t/phi}
/// Every arc kind maps onto this form; V and P follow from Q.
struct PolyExp {
  double a = 0.0, b = 0.0, c = 0.0, d = 0.0;
  Poly q;           // control-level exponential amplitude
  double phi = 0.0; // decay constant; unused when q is empty

  PolyExp() = default;
  PolyExp(double a, double b, double c, double d, Poly q = {}, double phi = 0.0);

  State state(double t) const;
  double jerk(double t) const;  // du/dt
  /// Integral of u^2/2 over [t1, t2].
  double energy(double t1, double t2) const;

  const Poly& v_amplitude() const { return vq_; }
  const Poly& p_amplitude() const { return pq_; }
  bool has_exponential() const { return !q.empty(); }

 private:
  Poly vq_, pq_;
};

enum class ArcKind { CubicPosition, ExponentialTracking, SaturatedControl, Cruise };

const char* to_string(ArcKind k);

struct CubicPosition {
  double a, b, c, d;
};
/// Rides the speed-dependent headway boundary behind a leader. The scalar
/// amplitude c_e is the constant term of `ce`; higher terms appear only when
/// the leader is itself on a tracking arc.
struct ExponentialTracking {
  double a_k, b_k, c_k, d_k;
  std::vector<double> ce;
  double phi;
  double c_e() const { return ce.empty() ? 0.0 : ce.front(); }
};
struct SaturatedControl {
  double u_const, v_start, p_start;
};
struct Cruise {
  double v_const, p_start;
};

/// A trajectory piece on [t_start, t_end].
class ArcSegment {
 public:
  using Params = std::variant<CubicPosition, ExponentialTracking, SaturatedControl, Cruise>;

  static ArcSegment cubic(double a, double b, double c, double d, double t_start, double t_end);
  static ArcSegment tracking(double a_k, double b_k, double c_k, double d_k,
                             std::vector<double> ce, double phi, double t_start, double t_end);
  static ArcSegment saturated(double u, double v_start, double p_start, double t_start,
                              double t_end);
  static ArcSegment cruise(double v, double p_start, double t_start, double t_end);
  /// Wraps an arbitrary closed form; classified as cubic when it has no
  /// exponential part, otherwise as tracking.
  static ArcSegment from_form(const PolyExp& f, double t_start, double t_end);

  ArcKind kind() const;
  const Params& params() const { return params_; }
  const PolyExp& form() const { return form_; }

  double t_start() const { return t_start_; }
  double t_end() const { return t_end_; }
  double duration() const { return t_end_ - t_start_; }

  /// Evaluates the closed form; does not clamp t to the arc window.
  State state(double t) const;
  double jerk(double t) const;
  double energy() const { return form_.energy(t_start_, t_end_); }

  ArcSegment with_window(double t_start, double t_end) const;

 private:
  ArcSegment(Params p, PolyExp f, double ts, double te);

  Params params_;
  PolyExp form_;
  double t_start_ = 0.0;
  double t_end_ = 0.0;
};

/// Interior stationary points of v (where u = 0) and of u (where du/dt = 0).
struct ArcExtrema {
  std::vector<std::pair<double, double>> speed;    // (t, v)
  std::vector<std::pair<double, double>> control;  // (t, u)
};

ArcExtrema arc_extrema(const ArcSegment& arc);

}  // namespace cavopt
