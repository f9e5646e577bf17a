#include "uavrl/baselines.hpp"

#include "uavrl/errors.hpp"

namespace uavrl {

namespace {

int step_toward(const WorldState& world, int agent, const Vec2& target) {
  const auto& u = world.uavs[agent];
  int best = 0;
  double best_dist = -1.0;
  for (int a = 0; a < kNumActions; ++a) {
    const Vec2 next = move_uav(u.xy, a, world.config);
    const double d = distance(next, target);
    if (best_dist < 0.0 || d < best_dist) {
      best_dist = d;
      best = a;
    }
  }
  return best;
}

}  // namespace

int scripted_greedy_action(const WorldState& world, int agent, const ScriptedConfig& cfg) {
  if (agent < 0 || agent >= world.config.num_uavs) throw ArgumentError("agent index out of range");
  const auto& u = world.uavs[agent];
  if (u.energy_j < cfg.energy_return_threshold * world.config.battery_capacity_j) {
    return step_toward(world, agent, world.config.station_xy);
  }
  int target = 0;
  for (int k = 1; k < world.config.num_sensors; ++k) {
    const auto& cand = world.sensors[k];
    const auto& cur = world.sensors[target];
    if (cand.aoi_s > cur.aoi_s) {
      target = k;
    } else if (cand.aoi_s == cur.aoi_s &&
               distance(u.xy, cand.xy) < distance(u.xy, cur.xy)) {
      target = k;
    }
  }
  return step_toward(world, agent, world.sensors[target].xy);
}

JointAction RandomController::act(const WorldState& world) {
  JointAction actions(world.config.num_uavs);
  for (auto& a : actions) a = static_cast<int>(rng_.next() & 7);  // 8 divides 2^64: exact
  return actions;
}

JointAction GreedyController::act(const WorldState& world) {
  JointAction actions(world.config.num_uavs);
  for (int i = 0; i < world.config.num_uavs; ++i) {
    actions[i] = world.uavs[i].active ? scripted_greedy_action(world, i, cfg_) : 0;
  }
  return actions;
}

}  // namespace uavrl
