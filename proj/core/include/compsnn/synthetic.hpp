#pragma once

#include <cstdint>
#include <vector>

#include "compsnn/demographics.hpp"
#include "compsnn/io.hpp"
#include "compsnn/trajectory.hpp"

namespace compsnn {

struct Rect {
  double x_min{0.0};
  double y_min{0.0};
  double x_max{0.0};
  double y_max{0.0};
};

struct Waypoint {
  double x{0.0};
  double y{0.0};
};

/// Arena with rectangular obstacles and an ordered list of checkpoints.
/// Navigators start at `start` and visit the checkpoints in order.
struct SyntheticWorld {
  Rect arena{0.0, 0.0, 100.0, 100.0};
  std::vector<Rect> obstacles;
  Waypoint start;
  std::vector<Waypoint> checkpoints;
  double sample_interval{0.5};  // 2 Hz
  double arrival_radius{2.0};
  std::size_t max_steps_per_leg{4000};

  /// Throws InvalidArgument if a checkpoint or the start lies outside the
  /// arena or inside an obstacle.
  void validate() const;
};

/// Three obstacles, four checkpoints on a 100 x 100 arena.
SyntheticWorld default_world();

/// Behaviour knobs derived from a demographic vector. u[4..7] have no
/// behavioural effect.
struct Behavior {
  double speed{1.0};            // map units per second, u[0]
  double heading_noise{0.0};    // stationary std of the heading noise (rad), u[1]
  double clearance{1.0};        // minimum distance kept from obstacles, u[2]
  double revisit_probability{0.0};  // u[3]
};

Behavior behavior_from_demographics(const DemographicVector& u);

/// Simulates one navigator. Throws UnreachableCheckpoint when a leg exceeds
/// the world's step budget.
RawTrajectory simulate_navigator(const SyntheticWorld& world, const Behavior& behavior, std::uint64_t seed,
                                 std::string id);

struct SyntheticDataset {
  std::vector<RawTrajectory> trajectories;
  std::vector<DemographicVector> demographics;
  DemographicSchema schema;
  std::vector<DemographicRecord> records;
};

/// Ordinal schema f1..f8 with the 101 levels "0".."100"; demographic values
/// are drawn on that grid so CSV round trips are exact.
DemographicSchema synthetic_schema();

SyntheticDataset generate_synthetic_dataset(std::uint64_t seed, std::size_t n_traj,
                                            const SyntheticWorld& world = default_world());

}  // namespace compsnn
