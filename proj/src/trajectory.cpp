#include "cavopt/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cavopt/model.hpp"

namespace cavopt {

namespace {

constexpr double kJoinTol = 1e-9;

bool close_rel(double x, double y) {
  return std::abs(x - y) <= kJoinTol * std::max(1.0, std::max(std::abs(x), std::abs(y)));
}

void require_contiguous(const std::vector<ArcSegment>& arcs) {
  for (std::size_t k = 1; k < arcs.size(); ++k)
    if (!close_rel(arcs[k - 1].t_end(), arcs[k].t_start()))
      throw StructureError("arcs are not contiguous in time");
}

}  // namespace

PiecewiseTrajectory::PiecewiseTrajectory(std::vector<ArcSegment> arcs, Unchecked)
    : arcs_(std::move(arcs)) {
  require_contiguous(arcs_);
}

PiecewiseTrajectory PiecewiseTrajectory::unchecked(std::vector<ArcSegment> arcs) {
  return PiecewiseTrajectory(std::move(arcs), Unchecked{});
}

PiecewiseTrajectory::PiecewiseTrajectory(std::vector<ArcSegment> arcs)
    : PiecewiseTrajectory(std::move(arcs), Unchecked{}) {
  if (arcs_.empty()) throw StructureError("trajectory has no arcs");
  for (std::size_t k = 1; k < arcs_.size(); ++k) {
    const double t = arcs_[k].t_start();
    const State l = arcs_[k - 1].state(t);
    const State r = arcs_[k].state(t);
    if (!close_rel(l.p, r.p) || !close_rel(l.v, r.v)) {
      std::ostringstream os;
      os << "discontinuity at t=" << t << ": dp=" << (r.p - l.p) << " dv=" << (r.v - l.v);
      throw StructureError(os.str());
    }
  }
}

double PiecewiseTrajectory::t0() const {
  if (arcs_.empty()) throw StructureError("empty trajectory");
  return arcs_.front().t_start();
}

double PiecewiseTrajectory::tf() const {
  if (arcs_.empty()) throw StructureError("empty trajectory");
  return arcs_.back().t_end();
}

double PiecewiseTrajectory::terminal_speed() const { return arcs_.back().state(tf()).v; }

std::vector<double> PiecewiseTrajectory::breakpoints() const {
  std::vector<double> out;
  for (std::size_t k = 1; k < arcs_.size(); ++k) out.push_back(arcs_[k].t_start());
  return out;
}

std::size_t PiecewiseTrajectory::locate(double t) const {
  const double slack = 1e-12 * std::max(1.0, std::abs(t));
  if (arcs_.empty() || t < t0() - slack || t > tf() + slack || std::isnan(t)) {
    std::ostringstream os;
    os << "t=" << t << " outside trajectory domain";
    throw DomainError(os.str());
  }
  auto it = std::upper_bound(arcs_.begin(), arcs_.end(), t,
                             [](double x, const ArcSegment& a) { return x < a.t_start(); });
  if (it == arcs_.begin()) return 0;
  return static_cast<std::size_t>(it - arcs_.begin()) - 1;
}

State PiecewiseTrajectory::eval(double t) const { return arcs_[locate(t)].state(t); }

State PiecewiseTrajectory::eval_left(double t) const {
  std::size_t k = locate(t);
  if (k > 0 && t <= arcs_[k].t_start()) --k;
  return arcs_[k].state(t);
}

State PiecewiseTrajectory::eval_extended(double t) const {
  if (t > tf()) {
    const State end = arcs_.back().state(tf());
    return {end.p + end.v * (t - tf()), end.v, 0.0};
  }
  return eval(t);
}

PiecewiseTrajectory PiecewiseTrajectory::with_cruise_extension(double t_end) const {
  if (!(t_end > tf())) return *this;
  std::vector<ArcSegment> arcs = arcs_;
  const State end = arcs_.back().state(tf());
  arcs.push_back(ArcSegment::cruise(end.v, end.p, tf(), t_end));
  return PiecewiseTrajectory(std::move(arcs), Unchecked{});
}

std::optional<double> PiecewiseTrajectory::time_at_position(double p) const {
  if (arcs_.empty()) return std::nullopt;
  for (const auto& arc : arcs_) {
    double lo = arc.t_start();
    double hi = arc.t_end();
    if (arc.state(lo).p > p) return lo;
    if (arc.state(hi).p < p) continue;
    for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, hi); ++it) {
      const double mid = 0.5 * (lo + hi);
      (arc.state(mid).p < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  }
  return std::nullopt;
}

Cost cost(const PiecewiseTrajectory& traj, double gamma) {
  Cost c;
  if (traj.empty()) return c;
  for (const auto& arc : traj.arcs()) c.E += arc.energy();
  c.T = traj.tf() - traj.t0();
  c.J = gamma * c.T + c.E;
  return c;
}

}  // namespace cavopt
