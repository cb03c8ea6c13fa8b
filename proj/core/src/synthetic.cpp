#include "compsnn/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>

#include "compsnn/error.hpp"
#include "compsnn/rng.hpp"

namespace compsnn {

namespace {

constexpr std::size_t kLevels = 101;
constexpr double kAvoidLookahead = 1.5;

bool inside(const Rect& r, double x, double y) {
  return x >= r.x_min && x <= r.x_max && y >= r.y_min && y <= r.y_max;
}

struct Contact {
  double distance;
  double nx;
  double ny;
};

// Distance from (x, y) to the rectangle and the outward normal at the
// nearest boundary point. Points inside get the normal of the nearest face.
Contact contact_with(const Rect& r, double x, double y) {
  const double cx = std::clamp(x, r.x_min, r.x_max);
  const double cy = std::clamp(y, r.y_min, r.y_max);
  const double dx = x - cx;
  const double dy = y - cy;
  const double d = std::hypot(dx, dy);
  if (d > 0.0) return {d, dx / d, dy / d};
  const double faces[4] = {x - r.x_min, r.x_max - x, y - r.y_min, r.y_max - y};
  const std::size_t k = static_cast<std::size_t>(std::min_element(faces, faces + 4) - faces);
  constexpr double nx[4] = {-1.0, 1.0, 0.0, 0.0};
  constexpr double ny[4] = {0.0, 0.0, -1.0, 1.0};
  return {-faces[k], nx[k], ny[k]};
}

}  // namespace

void SyntheticWorld::validate() const {
  const auto check = [this](const Waypoint& w, const char* what) {
    if (!inside(arena, w.x, w.y)) throw Error(ErrorCode::InvalidArgument, std::string(what) + " outside the arena");
    for (const Rect& o : obstacles) {
      if (inside(o, w.x, w.y)) throw Error(ErrorCode::InvalidArgument, std::string(what) + " inside an obstacle");
    }
  };
  check(start, "start");
  for (const Waypoint& c : checkpoints) check(c, "checkpoint");
  if (checkpoints.empty()) throw Error(ErrorCode::InvalidArgument, "world needs at least one checkpoint");
  if (!(sample_interval > 0.0) || !(arrival_radius > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "sample interval and arrival radius must be positive");
  }
}

SyntheticWorld default_world() {
  SyntheticWorld w;
  w.obstacles = {{25.0, 15.0, 40.0, 50.0}, {55.0, 35.0, 75.0, 50.0}, {30.0, 65.0, 60.0, 78.0}};
  w.start = {10.0, 10.0};
  w.checkpoints = {{85.0, 20.0}, {85.0, 85.0}, {15.0, 85.0}, {45.0, 57.0}};
  return w;
}

Behavior behavior_from_demographics(const DemographicVector& u) {
  Behavior b;
  b.speed = 1.5 + 3.0 * u.values[0];
  b.heading_noise = 0.8 * u.values[1];
  b.clearance = 1.0 + 4.0 * u.values[2];
  b.revisit_probability = 0.8 * u.values[3];
  return b;
}

RawTrajectory simulate_navigator(const SyntheticWorld& world, const Behavior& behavior, std::uint64_t seed,
                                 std::string id) {
  world.validate();
  SplitMix64 rng(seed);
  RawTrajectory traj;
  traj.id = std::move(id);

  double x = world.start.x + rng.uniform(-1.0, 1.0);
  double y = world.start.y + rng.uniform(-1.0, 1.0);
  double t = 0.0;
  traj.samples.push_back({t, x, y});

  constexpr double kPhi = 0.3;
  const double innovation = behavior.heading_noise * std::sqrt(1.0 - kPhi * kPhi);
  double noise = behavior.heading_noise * rng.normal();

  std::deque<std::size_t> targets;
  for (std::size_t i = 0; i < world.checkpoints.size(); ++i) targets.push_back(i);
  const std::size_t last = world.checkpoints.size() - 1;
  bool detour = false;

  // Obstacle-following state: obstacle index and turning sign.
  std::ptrdiff_t follow = -1;
  double follow_sign = 1.0;

  while (!targets.empty()) {
    const std::size_t target = targets.front();
    const Waypoint goal = world.checkpoints[target];
    std::size_t steps = 0;
    while (std::hypot(goal.x - x, goal.y - y) > world.arrival_radius) {
      if (++steps > world.max_steps_per_leg) {
        throw Error(ErrorCode::UnreachableCheckpoint, "checkpoint " + std::to_string(target) + " not reached");
      }
      noise = kPhi * noise + innovation * rng.normal();
      const double gx = goal.x - x;
      const double gy = goal.y - y;
      const double gn = std::hypot(gx, gy);
      const double c = std::cos(noise);
      const double s = std::sin(noise);
      double dx = (c * gx - s * gy) / gn;
      double dy = (s * gx + c * gy) / gn;

      const double step = behavior.speed * (1.0 + 0.1 * rng.normal()) * world.sample_interval;
      const double reach = std::max(step, 0.0);

      bool touching = false;
      for (std::size_t k = 0; k < world.obstacles.size(); ++k) {
        const Contact ct = contact_with(world.obstacles[k], x, y);
        if (ct.distance > behavior.clearance + kAvoidLookahead + reach) continue;
        const double inward = dx * ct.nx + dy * ct.ny;
        if (inward >= 0.0) continue;
        touching = true;
        // Slide along the obstacle, keeping the same turning direction
        // until the obstacle no longer blocks the way.
        const double tx = -ct.ny;
        const double ty = ct.nx;
        if (follow != static_cast<std::ptrdiff_t>(k)) {
          follow = static_cast<std::ptrdiff_t>(k);
          // Go round on the side that faces the goal.
          follow_sign = (tx * gx + ty * gy) < 0.0 ? -1.0 : 1.0;
        }
        dx = follow_sign * tx;
        dy = follow_sign * ty;
        break;
      }
      if (!touching) follow = -1;

      x += reach * dx;
      y += reach * dy;
      // Push back out to the clearance margin.
      for (const Rect& o : world.obstacles) {
        const Contact ct = contact_with(o, x, y);
        if (ct.distance < behavior.clearance) {
          const double push = behavior.clearance - ct.distance;
          x += push * ct.nx;
          y += push * ct.ny;
        }
      }
      x = std::clamp(x, world.arena.x_min, world.arena.x_max);
      y = std::clamp(y, world.arena.y_min, world.arena.y_max);
      t += world.sample_interval;
      traj.samples.push_back({t, x, y});
    }
    targets.pop_front();
    if (detour) {
      detour = false;
    } else if (target > 0 && rng.uniform() < behavior.revisit_probability) {
      // Go back to the previous checkpoint, then carry on.
      detour = true;
      targets.push_front(target - 1);
      if (target == last) targets.push_back(target);
    }
  }
  return traj;
}

DemographicSchema synthetic_schema() {
  DemographicSchema schema;
  for (std::size_t i = 0; i < kDemographicDim; ++i) {
    DemographicField& f = schema.fields[i];
    f.name = "f" + std::to_string(i + 1);
    f.kind = FieldKind::ordinal;
    for (std::size_t l = 0; l < kLevels; ++l) f.values.push_back(std::to_string(l));
  }
  return schema;
}

SyntheticDataset generate_synthetic_dataset(std::uint64_t seed, std::size_t n_traj, const SyntheticWorld& world) {
  if (n_traj < 2) throw Error(ErrorCode::InvalidArgument, "need at least two trajectories");
  SyntheticDataset ds;
  ds.schema = synthetic_schema();
  for (std::size_t i = 0; i < n_traj; ++i) {
    SplitMix64 rng(derive_seed(seed, 2 * i));
    DemographicVector u;
    DemographicRecord rec;
    char id[32];
    std::snprintf(id, sizeof(id), "traj_%04zu", i);
    rec.traj_id = id;
    for (std::size_t d = 0; d < kDemographicDim; ++d) {
      const std::uint64_t level = rng.below(kLevels);
      u.values[d] = static_cast<double>(level) / static_cast<double>(kLevels - 1);
      rec.fields[ds.schema.fields[d].name] = std::to_string(level);
    }
    ds.trajectories.push_back(simulate_navigator(world, behavior_from_demographics(u), derive_seed(seed, 2 * i + 1), id));
    ds.demographics.push_back(u);
    ds.records.push_back(std::move(rec));
  }
  return ds;
}

}  // namespace compsnn
