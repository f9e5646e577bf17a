#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nlohmann/json.hpp"

#include "uavrl/rng.hpp"

namespace uavrl {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

// Eight movement directions, counter-clockwise from east.
enum Direction : int {
  kEast = 0,
  kNorthEast = 1,
  kNorth = 2,
  kNorthWest = 3,
  kWest = 4,
  kSouthWest = 5,
  kSouth = 6,
  kSouthEast = 7,
};
inline constexpr int kNumActions = 8;

const char* direction_name(int action);

// World parameters. Defaults describe the 1000x1000 m field with 50 sensors,
// 4 UAVs and a 10-beam charge station at the center.
struct WorldConfig {
  double width_m = 1000.0;
  double height_m = 1000.0;
  int num_sensors = 50;
  int num_uavs = 4;
  double altitude_m = 80.0;
  double cruise_speed_mps = 5.0;
  double dt_s = 4.0;
  int horizon_steps = 500;
  double comm_range_m = 100.0;
  Vec2 station_xy{500.0, 500.0};
  double charge_radius_m = 250.0;
  int num_lbds = 10;
  double laser_tx_power_w = 10000.0;
  double eta_pv = 0.15;
  double battery_capacity_j = 500000.0;
  double p_move_w = 350.0;
  double p_hover_w = 300.0;  // reserved for inactive-but-powered states
  double aoi_cap_s = 2000.0;
  double c_collect = 0.5;
  double c_dead = 10.0;
  std::uint64_t seed = 1;

  // throws ConfigError naming the offending field
  void validate() const;
};

struct UavState {
  Vec2 xy;
  double energy_j = 0.0;
  bool active = true;
  int charging_lbd = -1;  // -1 = not charging
};

struct SensorState {
  Vec2 xy;          // fixed at init
  double aoi_s = 0.0;
};

struct WorldState {
  WorldConfig config;
  std::vector<UavState> uavs;
  std::vector<SensorState> sensors;
  std::vector<std::uint8_t> lbd_busy;
  int step = 0;
  SplitMix64 rng;

  bool done() const { return step >= config.horizon_steps; }
};

using JointAction = std::vector<int>;

struct StepOutcome {
  std::vector<double> agent_rewards;            // team + local per agent
  double team_reward = 0.0;
  std::vector<std::pair<int, int>> collections;  // (uav, sensor) credit pairs
  std::vector<double> charged_j;
  std::vector<double> consumed_j;
  std::vector<std::uint8_t> depleted;            // went inactive this step
  bool done = false;
};

double distance(const Vec2& a, const Vec2& b);

// Sensors placed uniformly at random from the config seed; UAVs start at the
// station with full batteries; all AoI zero; LBDs idle.
WorldState init_world(const WorldConfig& config);

// One decision-step displacement along the chosen direction, clamped per
// axis to the area bounds.
Vec2 move_uav(const Vec2& xy, int action, const WorldConfig& config);

// Releases every LBD, then assigns idle LBDs to active in-zone UAVs, lowest
// energy first (ties by UAV index), one beam per UAV.
void assign_lbds(WorldState& world);

// Advances the world one step: move, consume, charge, collect, reward.
StepOutcome step(WorldState& world, const JointAction& action);

// Agent-local view: [x_norm, y_norm, energy_norm, masked aoi..., station dx, dy].
// Out-of-range sensors carry the -1 sentinel. Length 5 + num_sensors.
std::vector<double> observe(const WorldState& world, int agent);

// Centralized view: per-UAV (x_norm, y_norm, e_norm) then per-sensor aoi_norm.
// Length 3*num_uavs + num_sensors.
std::vector<double> global_state(const WorldState& world);

// Team reward plus per-agent depletion penalties, given a post-transition
// world. Training reward for agent i is team + local[i].
std::pair<double, std::vector<double>> reward(const WorldState& world,
                                              const std::vector<std::pair<int, int>>& collections,
                                              const std::vector<std::uint8_t>& depleted_this_step);

// Versioned JSON snapshot; round-trips bit-exactly.
std::string world_to_json(const WorldState& world);
WorldState world_from_json(const std::string& text);

nlohmann::ordered_json world_config_to_json(const WorldConfig& config);
WorldConfig world_config_from_json(const nlohmann::ordered_json& j);

}  // namespace uavrl
