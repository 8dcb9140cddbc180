#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "cavopt/model.hpp"
#include "cavopt/trajectory.hpp"

namespace cavopt {

using TrajectoryPtr = std::shared_ptr<const PiecewiseTrajectory>;

struct Predecessor {
  int id = 0;
  int index = 0;        // 1-based queue position
  TrajectoryPtr traj;   // null until solved
};

/// What CAV i needs to know about the vehicles ahead of it.
struct QueueView {
  int index_i = 0;
  std::optional<Predecessor> k;  // latest same-lane vehicle
  std::optional<Predecessor> c;  // latest laterally conflicting vehicle
  std::optional<Predecessor> o;  // latest vehicle that can neither rear-end nor collide
  // Ids of the full subsets, in queue order.
  std::vector<int> L, C, O, R;
};

enum class Relation { SameLane, Conflicting, NonConflicting, SameRoadOtherLane };

/// FIFO queue of vehicles in the control zone.
class Queue {
 public:
  explicit Queue(std::uint64_t seed = 0) : rng_(seed) {}

  /// Appends in arrival order and returns the 1-based position. An arrival
  /// within 1e-9 s of the last one joins its tie block at a seeded random
  /// position, which may shift the positions of the block's earlier members.
  int enqueue(const VehicleArrival& a);
  /// Sorts by t0 (stable), then enqueues one by one.
  void enqueue_all(std::vector<VehicleArrival> arrivals);

  const std::vector<VehicleArrival>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  int index_of(int id) const;

  void set_solution(int id, PiecewiseTrajectory traj);
  TrajectoryPtr solution(int id) const;

  QueueView classify(int id, const ConflictMatrix& conflict) const;

 private:
  std::uint64_t uniform_below(std::uint64_t n);

  std::mt19937_64 rng_;
  std::vector<VehicleArrival> entries_;
  std::vector<TrajectoryPtr> solutions_;  // parallel to entries_
};

/// Relation of predecessor j to vehicle i.
Relation relate(const VehicleArrival& i, const VehicleArrival& j, const ConflictMatrix& conflict);

struct GuaranteeViolation {
  std::string check;  // "rear-end", "lateral" or "fifo"
  int leader = 0;
  int follower = 0;
  double t = 0.0;
  double margin = 0.0;  // negative when violated
};

struct GuaranteeReport {
  std::vector<GuaranteeViolation> violations;
  int pairs_checked = 0;
  bool passed() const { return violations.empty(); }
};

struct SolvedVehicle {
  VehicleArrival arrival;
  PiecewiseTrajectory traj;
};

/// Audits rear-end, lateral and crossing-order safety over all pairs. `solved`
/// must be in queue order.
GuaranteeReport check_guarantees(const std::vector<SolvedVehicle>& solved,
                                 const ScenarioConfig& cfg);

}  // namespace cavopt
