#include "cavopt/coordinator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cavopt {

namespace {

constexpr double kTieTol = 1e-9;

}  // namespace

std::uint64_t Queue::uniform_below(std::uint64_t n) {
  // Rejection sampling keeps the draw identical across standard libraries.
  const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
  const std::uint64_t limit = max - (max % n + 1) % n;
  std::uint64_t r = rng_();
  while (r > limit) r = rng_();
  return r % n;
}

int Queue::enqueue(const VehicleArrival& a) {
  if (!std::isfinite(a.t0)) throw ConfigError("arrival time must be finite");
  if (!entries_.empty() && a.t0 < entries_.back().t0 - kTieTol)
    throw ConfigError("arrivals must be enqueued in time order");
  for (const auto& e : entries_)
    if (e.id == a.id) throw ConfigError("duplicate vehicle id " + std::to_string(a.id));

  std::size_t block = entries_.size();
  while (block > 0 && std::abs(entries_[block - 1].t0 - a.t0) <= kTieTol) --block;
  const std::size_t tied = entries_.size() - block;
  std::size_t pos = entries_.size();
  // Uniform insertion into the tie block is a uniform random permutation.
  if (tied > 0) pos = block + static_cast<std::size_t>(uniform_below(tied + 1));
  entries_.insert(entries_.begin() + static_cast<std::ptrdiff_t>(pos), a);
  solutions_.insert(solutions_.begin() + static_cast<std::ptrdiff_t>(pos), nullptr);
  return static_cast<int>(pos) + 1;
}

void Queue::enqueue_all(std::vector<VehicleArrival> arrivals) {
  std::stable_sort(arrivals.begin(), arrivals.end(),
                   [](const auto& x, const auto& y) { return x.t0 < y.t0; });
  for (const auto& a : arrivals) enqueue(a);
}

int Queue::index_of(int id) const {
  for (std::size_t k = 0; k < entries_.size(); ++k)
    if (entries_[k].id == id) return static_cast<int>(k) + 1;
  throw ConfigError("vehicle " + std::to_string(id) + " is not queued");
}

void Queue::set_solution(int id, PiecewiseTrajectory traj) {
  solutions_[static_cast<std::size_t>(index_of(id) - 1)] =
      std::make_shared<const PiecewiseTrajectory>(std::move(traj));
}

TrajectoryPtr Queue::solution(int id) const {
  return solutions_[static_cast<std::size_t>(index_of(id) - 1)];
}

Relation relate(const VehicleArrival& i, const VehicleArrival& j, const ConflictMatrix& conflict) {
  const bool conflicting = conflict.conflicts(i.approach(), j.approach());
  if (i.road == j.road && i.movement == j.movement) {
    if (i.lane == j.lane) return Relation::SameLane;
    if (!conflicting) return Relation::SameRoadOtherLane;
  }
  if (conflicting) return Relation::Conflicting;
  return Relation::NonConflicting;
}

QueueView Queue::classify(int id, const ConflictMatrix& conflict) const {
  QueueView view;
  view.index_i = index_of(id);
  const auto& me = entries_[static_cast<std::size_t>(view.index_i - 1)];
  for (int idx = 1; idx < view.index_i; ++idx) {
    const auto& other = entries_[static_cast<std::size_t>(idx - 1)];
    const Predecessor pred{other.id, idx, solutions_[static_cast<std::size_t>(idx - 1)]};
    switch (relate(me, other, conflict)) {
      case Relation::SameLane:
        view.L.push_back(other.id);
        view.k = pred;
        break;
      case Relation::Conflicting:
        view.C.push_back(other.id);
        view.c = pred;
        break;
      case Relation::NonConflicting:
        view.O.push_back(other.id);
        view.o = pred;
        break;
      case Relation::SameRoadOtherLane:
        view.R.push_back(other.id);
        view.o = pred;
        break;
    }
  }
  return view;
}

GuaranteeReport check_guarantees(const std::vector<SolvedVehicle>& solved,
                                 const ScenarioConfig& cfg) {
  GuaranteeReport rep;
  constexpr double kGapTol = 1e-6;
  constexpr double kTimeTol = 1e-9;
  constexpr double kStep = 1e-3;

  for (std::size_t i = 0; i < solved.size(); ++i) {
    const auto& fi = solved[i];
    const double ti0 = fi.traj.t0();
    const double tif = fi.traj.tf();
    const auto tim = fi.traj.time_at_position(cfg.L);

    std::vector<double> probe;
    for (const auto& arc : fi.traj.arcs()) {
      probe.push_back(arc.t_start());
      for (const auto& [t, v] : arc_extrema(arc).speed) probe.push_back(t);
      for (const auto& [t, u] : arc_extrema(arc).control) probe.push_back(t);
    }
    probe.push_back(tif);
    const auto n = static_cast<long>(std::floor((tif - ti0) / kStep));
    for (long s = 0; s <= n; ++s) probe.push_back(ti0 + static_cast<double>(s) * kStep);

    for (std::size_t j = 0; j < i; ++j) {
      const auto& lj = solved[j];
      ++rep.pairs_checked;
      const double tjf = lj.traj.tf();
      if (tif < tjf - kTimeTol)
        rep.violations.push_back({"fifo", lj.arrival.id, fi.arrival.id, tif, tif - tjf});

      switch (relate(fi.arrival, lj.arrival, cfg.conflict)) {
        case Relation::SameLane: {
          double worst = std::numeric_limits<double>::infinity();
          double worst_t = ti0;
          for (double t : probe) {
            if (t < lj.traj.t0()) continue;
            const State si = fi.traj.eval(std::min(t, tif));
            const double gap =
                lj.traj.eval_extended(t).p - si.p - cfg.phi * si.v - cfg.delta0;
            if (gap < worst) {
              worst = gap;
              worst_t = t;
            }
          }
          if (worst < -kGapTol)
            rep.violations.push_back({"rear-end", lj.arrival.id, fi.arrival.id, worst_t, worst});
          break;
        }
        case Relation::Conflicting: {
          const double t_enter = tim.value_or(tif);
          if (t_enter < tjf - kTimeTol)
            rep.violations.push_back(
                {"lateral", lj.arrival.id, fi.arrival.id, t_enter, t_enter - tjf});
          break;
        }
        default:
          break;
      }
    }
  }
  return rep;
}

}  // namespace cavopt
