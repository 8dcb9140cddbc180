#include <doctest.h>

#include <cmath>
#include <random>

#include "cavopt/bounds.hpp"

using namespace cavopt;

namespace {

ScenarioConfig limits(double u_max, double v_max) {
  ScenarioConfig c;
  c.u_max = u_max;
  c.v_max = v_max;
  return c;
}

// Forward simulation at a fixed step: constant acceleration u until speed
// reaches v_lim, then cruise. Exact within each step; the crossing of D is
// located by bisection inside the step.
double simulate_exit(double v0, double D, double u, double v_lim) {
  const double dt = 1e-3;
  auto advance = [&](double v, double h, double& p_out) {
    const double t_sat = (v_lim - v) / u;
    if (t_sat >= h) {
      p_out = v * h + 0.5 * u * h * h;
      return v + u * h;
    }
    const double ts = std::max(t_sat, 0.0);
    p_out = v * ts + 0.5 * u * ts * ts + v_lim * (h - ts);
    return v_lim;
  };
  double t = 0.0, p = 0.0, v = v0;
  for (;;) {
    double dp = 0.0;
    const double vn = advance(v, dt, dp);
    if (p + dp >= D) {
      double lo = 0.0, hi = dt;
      for (int k = 0; k < 60; ++k) {
        const double mid = 0.5 * (lo + hi);
        double q = 0.0;
        advance(v, mid, q);
        (p + q < D ? lo : hi) = mid;
      }
      return t + 0.5 * (lo + hi);
    }
    p += dp;
    v = vn;
    t += dt;
    if (t > 1e4) return INFINITY;
  }
}

}  // namespace

TEST_CASE("speed-control lower bound example") {
  const auto b = t_lower_speed_control(0.0, 10.0, limits(0.2, 13.5));
  CHECK(b.reaches_v_max);
  CHECK(b.t_L == doctest::Approx(400.0 / 13.5 + 3.5 * 3.5 / (2 * 0.2 * 13.5)));
  CHECK(b.t_L == doctest::Approx(31.90).epsilon(1e-3));
  CHECK(b.vf_hypothesis == 13.5);
  CHECK(b.t_L == doctest::Approx(simulate_exit(10.0, 400.0, 0.2, 13.5)).epsilon(1e-6));
}

TEST_CASE("speed-control lower bound limits") {
  const auto at_max = t_lower_speed_control(2.0, 13.5, limits(0.2, 13.5));
  CHECK(at_max.t_L == doctest::Approx(2.0 + 400.0 / 13.5));
  const auto hard = t_lower_speed_control(0.0, 10.0, limits(1e9, 13.5));
  CHECK(hard.t_L == doctest::Approx(400.0 / 13.5));
  // Does not reach v_max before the exit.
  const auto slow = t_lower_speed_control(0.0, 10.0, limits(0.1, 20.0));
  CHECK_FALSE(slow.reaches_v_max);
  CHECK(slow.vf_hypothesis == doctest::Approx(std::sqrt(180.0)));
  CHECK(slow.t_L == doctest::Approx((std::sqrt(180.0) - 10.0) / 0.1));
}

TEST_CASE("upper bound example") {
  ScenarioConfig c;
  c.u_min = -0.1;
  c.v_min = 0.0;
  const auto tu = t_upper(0.0, 10.0, c);
  REQUIRE(tu);
  CHECK(*tu == doctest::Approx((std::sqrt(20.0) - 10.0) / -0.1));
  CHECK(*tu == doctest::Approx(55.28).epsilon(1e-4));
  CHECK(*tu == doctest::Approx(simulate_exit(10.0, 400.0, -0.1, 0.0)).epsilon(1e-6));
}

TEST_CASE("upper bound when the vehicle could stop or is held at v_min") {
  ScenarioConfig c;
  c.u_min = -3.0;
  c.v_min = 0.0;
  CHECK_FALSE(t_upper(0.0, 10.0, c).has_value());
  c.v_min = 5.0;
  c.u_min = -1e9;
  CHECK(*t_upper(1.0, 10.0, c) == doctest::Approx(1.0 + 400.0 / 5.0));
  c.u_min = -0.5;
  CHECK(*t_upper(0.0, 5.0, c) == doctest::Approx(80.0));
  CHECK(*t_upper(0.0, 10.0, c) == doctest::Approx(simulate_exit(10.0, 400.0, -0.5, 5.0)).epsilon(1e-6));
}

TEST_CASE("bound monotonicity by finite differences") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    ScenarioConfig c;
    c.u_max = 0.05 + 2.0 * U(rng);
    c.u_min = -(0.05 + 2.0 * U(rng));
    c.v_max = 12.0 + 10.0 * U(rng);
    c.v_min = 1.0 + 4.0 * U(rng);
    c.L = 100.0 + 400.0 * U(rng);
    const double v0 = c.v_min + (c.v_max - c.v_min) * (0.05 + 0.9 * U(rng));
    const double h = 1e-6;

    auto up = c;
    up.u_max += h;
    CHECK(t_lower_speed_control(0.0, v0, up).t_L <= t_lower_speed_control(0.0, v0, c).t_L + 1e-12);
    auto longer = c;
    longer.L += h;
    CHECK(t_lower_speed_control(0.0, v0, longer).t_L >= t_lower_speed_control(0.0, v0, c).t_L - 1e-12);
    // A less negative u_min brakes less, so the latest exit comes earlier.
    auto soft = c;
    soft.u_min += h;
    CHECK(*t_upper(0.0, v0, soft) <= *t_upper(0.0, v0, c) + 1e-12);
    CHECK(*t_upper(0.0, v0, longer) >= *t_upper(0.0, v0, c) - 1e-12);
  }
}

TEST_CASE("branches agree at the switch point") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int k = 0; k < 50; ++k) {
    ScenarioConfig c;
    c.u_max = 0.1 + U(rng);
    c.v_max = 15.0 + 5.0 * U(rng);
    const double v0 = 5.0 + 8.0 * U(rng);
    // 2 D u_max + v0^2 = v_max^2
    c.L = (c.v_max * c.v_max - v0 * v0) / (2.0 * c.u_max) - c.S;
    auto below = c, above = c;
    below.L *= 1.0 - 1e-13;
    above.L *= 1.0 + 1e-13;
    const auto b1 = t_lower_speed_control(0.0, v0, below);
    const auto b2 = t_lower_speed_control(0.0, v0, above);
    CHECK(b1.reaches_v_max != b2.reaches_v_max);
    CHECK(std::abs(b1.t_L - b2.t_L) <= 1e-9);

    ScenarioConfig d;
    d.u_min = -(0.1 + U(rng));
    d.v_min = 1.0 + 3.0 * U(rng);
    const double w0 = 8.0 + 8.0 * U(rng);
    d.L = (d.v_min * d.v_min - w0 * w0) / (2.0 * d.u_min) - d.S;
    auto lo = d, hi = d;
    lo.L *= 1.0 - 1e-13;
    hi.L *= 1.0 + 1e-13;
    CHECK(std::abs(*t_upper(0.0, w0, lo) - *t_upper(0.0, w0, hi)) <= 1e-9);
  }
}

TEST_CASE("lower bound matches forward simulation on random cases") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    ScenarioConfig c;
    c.u_max = 0.05 + 1.5 * U(rng);
    c.v_max = 10.0 + 15.0 * U(rng);
    c.L = 50.0 + 450.0 * U(rng);
    const double v0 = 1.0 + (c.v_max - 1.5) * U(rng);
    const double t0 = 10.0 * U(rng);
    const double tl = t_lower_speed_control(t0, v0, c).t_L;
    CHECK(std::abs(tl - t0 - simulate_exit(v0, c.travel_distance(), c.u_max, c.v_max)) < 1e-4);
  }
}

TEST_CASE("composite lower bound") {
  const ScenarioConfig cfg = limits(0.2, 13.5);
  VehicleArrival me;
  me.t0 = 0.0;
  me.v0 = 10.0;

  QueueView none;
  const auto alone = t_lower_composite(me, none, cfg, 13.5);
  CHECK(alone.t_lower_composite == doctest::Approx(alone.t_L));
  CHECK(alone.binding_term == BindingTerm::SpeedControl);
  CHECK_FALSE(alone.follower_term.has_value());

  QueueView q;
  q.k = Predecessor{7, 1,
                    std::make_shared<const PiecewiseTrajectory>(
                        std::vector<ArcSegment>{ArcSegment::cruise(10.0, 10.0, 0.0, 39.0)})};
  const auto follow = t_lower_composite(me, q, cfg, 10.0);
  CHECK(follow.t_L == doctest::Approx(31.90).epsilon(1e-3));
  CHECK(*follow.follower_term == doctest::Approx(40.0));
  CHECK(follow.t_lower_composite == doctest::Approx(40.0));
  CHECK(follow.binding_term == BindingTerm::Follower);

  q.o = Predecessor{8, 2,
                    std::make_shared<const PiecewiseTrajectory>(
                        std::vector<ArcSegment>{ArcSegment::cruise(8.0, 0.0, 0.0, 50.0)})};
  const auto other = t_lower_composite(me, q, cfg, 10.0);
  CHECK(other.t_lower_composite == doctest::Approx(50.0));
  CHECK(other.binding_term == BindingTerm::OppositeOrAdjacent);
  CHECK(other.t_lower_composite >= other.t_L);
}

TEST_CASE("follower bound is undefined for a stopped leader") {
  VehicleArrival me;
  me.v0 = 10.0;
  QueueView q;
  q.k = Predecessor{1, 1,
                    std::make_shared<const PiecewiseTrajectory>(
                        std::vector<ArcSegment>{ArcSegment::saturated(-1.0, 10.0, 0.0, 0.0, 10.0)})};
  CHECK_THROWS_AS(t_lower_composite(me, q, ScenarioConfig{}, 10.0), InfeasibleError);
}
