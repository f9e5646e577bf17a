#include "uavrl/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "nlohmann/json.hpp"

#include "uavrl/errors.hpp"

namespace uavrl {

namespace {

using json = nlohmann::ordered_json;

constexpr double kInvSqrt2 = 0.70710678118654752440;

// unit direction vectors, counter-clockwise from east
constexpr double kDirX[kNumActions] = {1.0, kInvSqrt2, 0.0, -kInvSqrt2, -1.0, -kInvSqrt2, 0.0, kInvSqrt2};
constexpr double kDirY[kNumActions] = {0.0, kInvSqrt2, 1.0, kInvSqrt2, 0.0, -kInvSqrt2, -1.0, -kInvSqrt2};

constexpr const char* kDirNames[kNumActions] = {"E", "NE", "N", "NW", "W", "SW", "S", "SE"};

double clamp(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

void require(bool ok, const std::string& field, const std::string& constraint) {
  if (!ok) throw ConfigError(field + " " + constraint);
}

}  // namespace

const char* direction_name(int action) {
  if (action < 0 || action >= kNumActions) throw ArgumentError("action out of range 0..7");
  return kDirNames[action];
}

double distance(const Vec2& a, const Vec2& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

void WorldConfig::validate() const {
  require(width_m > 0.0, "width_m", "must be > 0");
  require(height_m > 0.0, "height_m", "must be > 0");
  require(num_sensors > 0, "num_sensors", "must be >= 1");
  require(num_uavs > 0, "num_uavs", "must be >= 1");
  require(cruise_speed_mps > 0.0, "cruise_speed_mps", "must be > 0");
  require(dt_s > 0.0, "dt_s", "must be > 0");
  require(horizon_steps > 0, "horizon_steps", "must be >= 1");
  require(comm_range_m > 0.0, "comm_range_m", "must be > 0");
  require(station_xy.x >= 0.0 && station_xy.x <= width_m, "station_xy.x", "must lie inside the area");
  require(station_xy.y >= 0.0 && station_xy.y <= height_m, "station_xy.y", "must lie inside the area");
  require(charge_radius_m > 0.0, "charge_radius_m", "must be > 0");
  require(num_lbds >= 1, "num_lbds", "must be >= 1");
  require(laser_tx_power_w >= 0.0, "laser_tx_power_w", "must be >= 0");
  require(eta_pv > 0.0 && eta_pv <= 1.0, "eta_pv", "must lie in (0,1]");
  require(battery_capacity_j > 0.0, "battery_capacity_j", "must be > 0");
  require(p_move_w >= 0.0, "p_move_w", "must be >= 0");
  require(p_hover_w >= 0.0, "p_hover_w", "must be >= 0");
  require(aoi_cap_s > 0.0, "aoi_cap_s", "must be > 0");
  require(c_collect >= 0.0, "c_collect", "must be >= 0");
  require(c_dead >= 0.0, "c_dead", "must be >= 0");
}

WorldState init_world(const WorldConfig& config) {
  config.validate();
  WorldState world;
  world.config = config;
  world.rng = SplitMix64(config.seed);
  world.sensors.resize(config.num_sensors);
  for (auto& s : world.sensors) {
    s.xy.x = world.rng.uniform(0.0, config.width_m);
    s.xy.y = world.rng.uniform(0.0, config.height_m);
    s.aoi_s = 0.0;
  }
  world.uavs.resize(config.num_uavs);
  for (auto& u : world.uavs) {
    u.xy = config.station_xy;
    u.energy_j = config.battery_capacity_j;
    u.active = true;
    u.charging_lbd = -1;
  }
  world.lbd_busy.assign(config.num_lbds, 0);
  world.step = 0;
  return world;
}

Vec2 move_uav(const Vec2& xy, int action, const WorldConfig& config) {
  if (action < 0 || action >= kNumActions) throw ArgumentError("action out of range 0..7");
  const double d = config.cruise_speed_mps * config.dt_s;
  Vec2 out;
  out.x = clamp(xy.x + d * kDirX[action], 0.0, config.width_m);
  out.y = clamp(xy.y + d * kDirY[action], 0.0, config.height_m);
  return out;
}

void assign_lbds(WorldState& world) {
  std::fill(world.lbd_busy.begin(), world.lbd_busy.end(), 0);
  for (auto& u : world.uavs) u.charging_lbd = -1;

  std::vector<int> eligible;
  for (int i = 0; i < static_cast<int>(world.uavs.size()); ++i) {
    const auto& u = world.uavs[i];
    if (u.active && distance(u.xy, world.config.station_xy) <= world.config.charge_radius_m) {
      eligible.push_back(i);
    }
  }
  std::sort(eligible.begin(), eligible.end(), [&](int a, int b) {
    if (world.uavs[a].energy_j != world.uavs[b].energy_j) {
      return world.uavs[a].energy_j < world.uavs[b].energy_j;
    }
    return a < b;
  });
  const int n = std::min<int>(static_cast<int>(eligible.size()), world.config.num_lbds);
  for (int k = 0; k < n; ++k) {
    world.uavs[eligible[k]].charging_lbd = k;
    world.lbd_busy[k] = 1;
  }
}

StepOutcome step(WorldState& world, const JointAction& action) {
  if (world.done()) throw StateError("step() called on a finished world");
  const auto& cfg = world.config;
  if (static_cast<int>(action.size()) != cfg.num_uavs) {
    throw ArgumentError("joint action length must equal num_uavs");
  }
  for (int a : action) {
    if (a < 0 || a >= kNumActions) throw ArgumentError("action out of range 0..7");
  }

  StepOutcome out;
  const int n_uav = cfg.num_uavs;
  out.charged_j.assign(n_uav, 0.0);
  out.consumed_j.assign(n_uav, 0.0);
  out.depleted.assign(n_uav, 0);

  // 1) motion, 2) consumption
  for (int i = 0; i < n_uav; ++i) {
    auto& u = world.uavs[i];
    if (!u.active) continue;
    u.xy = move_uav(u.xy, action[i], cfg);
    out.consumed_j[i] = cfg.p_move_w * cfg.dt_s;
  }

  // 3) charging
  assign_lbds(world);
  for (int i = 0; i < n_uav; ++i) {
    if (world.uavs[i].charging_lbd >= 0) {
      out.charged_j[i] = cfg.eta_pv * cfg.laser_tx_power_w * cfg.dt_s;
    }
  }

  // 4) energy bookkeeping; hitting zero grounds the UAV for good
  for (int i = 0; i < n_uav; ++i) {
    auto& u = world.uavs[i];
    if (!u.active) continue;
    u.energy_j = clamp(u.energy_j - out.consumed_j[i] + out.charged_j[i], 0.0, cfg.battery_capacity_j);
    if (u.energy_j <= 0.0) {
      u.energy_j = 0.0;
      u.active = false;
      out.depleted[i] = 1;
      if (u.charging_lbd >= 0) {
        world.lbd_busy[u.charging_lbd] = 0;
        u.charging_lbd = -1;
      }
    }
  }

  // 5) collection / aging
  for (int k = 0; k < cfg.num_sensors; ++k) {
    auto& s = world.sensors[k];
    bool collected = false;
    for (int i = 0; i < n_uav; ++i) {
      const auto& u = world.uavs[i];
      if (u.active && distance(u.xy, s.xy) <= cfg.comm_range_m) {
        out.collections.emplace_back(i, k);
        collected = true;
      }
    }
    if (collected) {
      s.aoi_s = 0.0;
    } else {
      s.aoi_s += cfg.dt_s;
    }
  }

  // 6) rewards
  auto [team, locals] = reward(world, out.collections, out.depleted);
  out.team_reward = team;
  out.agent_rewards.resize(n_uav);
  for (int i = 0; i < n_uav; ++i) out.agent_rewards[i] = team + locals[i];

  // 7) clock
  world.step += 1;
  out.done = world.done();
  return out;
}

std::vector<double> observe(const WorldState& world, int agent) {
  const auto& cfg = world.config;
  if (agent < 0 || agent >= cfg.num_uavs) throw ArgumentError("agent index out of range");
  const auto& u = world.uavs[agent];
  std::vector<double> obs;
  obs.reserve(5 + cfg.num_sensors);
  obs.push_back(u.xy.x / cfg.width_m);
  obs.push_back(u.xy.y / cfg.height_m);
  obs.push_back(u.energy_j / cfg.battery_capacity_j);
  for (const auto& s : world.sensors) {
    if (distance(u.xy, s.xy) <= cfg.comm_range_m) {
      obs.push_back(clamp(s.aoi_s / cfg.aoi_cap_s, 0.0, 1.0));
    } else {
      obs.push_back(-1.0);
    }
  }
  obs.push_back((cfg.station_xy.x - u.xy.x) / cfg.width_m);
  obs.push_back((cfg.station_xy.y - u.xy.y) / cfg.height_m);
  return obs;
}

std::vector<double> global_state(const WorldState& world) {
  const auto& cfg = world.config;
  std::vector<double> state;
  state.reserve(3 * cfg.num_uavs + cfg.num_sensors);
  for (const auto& u : world.uavs) {
    state.push_back(u.xy.x / cfg.width_m);
    state.push_back(u.xy.y / cfg.height_m);
    state.push_back(u.energy_j / cfg.battery_capacity_j);
  }
  for (const auto& s : world.sensors) {
    state.push_back(clamp(s.aoi_s / cfg.aoi_cap_s, 0.0, 1.0));
  }
  return state;
}

std::pair<double, std::vector<double>> reward(const WorldState& world,
                                              const std::vector<std::pair<int, int>>& collections,
                                              const std::vector<std::uint8_t>& depleted_this_step) {
  const auto& cfg = world.config;
  double aoi_sum = 0.0;
  for (const auto& s : world.sensors) aoi_sum += clamp(s.aoi_s / cfg.aoi_cap_s, 0.0, 1.0);
  const double team = -aoi_sum / cfg.num_sensors +
                      cfg.c_collect * static_cast<double>(collections.size()) / cfg.num_sensors;
  std::vector<double> locals(cfg.num_uavs, 0.0);
  for (int i = 0; i < cfg.num_uavs && i < static_cast<int>(depleted_this_step.size()); ++i) {
    if (depleted_this_step[i]) locals[i] = -cfg.c_dead;
  }
  return {team, locals};
}

nlohmann::ordered_json world_config_to_json(const WorldConfig& c) {
  json j;
  j["width_m"] = c.width_m;
  j["height_m"] = c.height_m;
  j["num_sensors"] = c.num_sensors;
  j["num_uavs"] = c.num_uavs;
  j["altitude_m"] = c.altitude_m;
  j["cruise_speed_mps"] = c.cruise_speed_mps;
  j["dt_s"] = c.dt_s;
  j["horizon_steps"] = c.horizon_steps;
  j["comm_range_m"] = c.comm_range_m;
  j["station_xy"] = {c.station_xy.x, c.station_xy.y};
  j["charge_radius_m"] = c.charge_radius_m;
  j["num_lbds"] = c.num_lbds;
  j["laser_tx_power_w"] = c.laser_tx_power_w;
  j["eta_pv"] = c.eta_pv;
  j["battery_capacity_j"] = c.battery_capacity_j;
  j["p_move_w"] = c.p_move_w;
  j["p_hover_w"] = c.p_hover_w;
  j["aoi_cap_s"] = c.aoi_cap_s;
  j["c_collect"] = c.c_collect;
  j["c_dead"] = c.c_dead;
  j["seed"] = c.seed;
  return j;
}

WorldConfig world_config_from_json(const nlohmann::ordered_json& j) {
  WorldConfig c;
  c.width_m = j.at("width_m").get<double>();
  c.height_m = j.at("height_m").get<double>();
  c.num_sensors = j.at("num_sensors").get<int>();
  c.num_uavs = j.at("num_uavs").get<int>();
  c.altitude_m = j.at("altitude_m").get<double>();
  c.cruise_speed_mps = j.at("cruise_speed_mps").get<double>();
  c.dt_s = j.at("dt_s").get<double>();
  c.horizon_steps = j.at("horizon_steps").get<int>();
  c.comm_range_m = j.at("comm_range_m").get<double>();
  c.station_xy = {j.at("station_xy")[0].get<double>(), j.at("station_xy")[1].get<double>()};
  c.charge_radius_m = j.at("charge_radius_m").get<double>();
  c.num_lbds = j.at("num_lbds").get<int>();
  c.laser_tx_power_w = j.at("laser_tx_power_w").get<double>();
  c.eta_pv = j.at("eta_pv").get<double>();
  c.battery_capacity_j = j.at("battery_capacity_j").get<double>();
  c.p_move_w = j.at("p_move_w").get<double>();
  c.p_hover_w = j.at("p_hover_w").get<double>();
  c.aoi_cap_s = j.at("aoi_cap_s").get<double>();
  c.c_collect = j.at("c_collect").get<double>();
  c.c_dead = j.at("c_dead").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

std::string world_to_json(const WorldState& world) {
  json j;
  j["version"] = 1;
  j["config"] = world_config_to_json(world.config);
  json uavs = json::array();
  for (const auto& u : world.uavs) {
    uavs.push_back({{"x", u.xy.x},
                    {"y", u.xy.y},
                    {"energy_j", u.energy_j},
                    {"active", u.active},
                    {"charging_lbd", u.charging_lbd}});
  }
  j["uavs"] = std::move(uavs);
  json sensors = json::array();
  for (const auto& s : world.sensors) {
    sensors.push_back({{"x", s.xy.x}, {"y", s.xy.y}, {"aoi_s", s.aoi_s}});
  }
  j["sensors"] = std::move(sensors);
  j["lbd_busy"] = world.lbd_busy;
  j["step"] = world.step;
  j["rng_state"] = world.rng.state();
  return j.dump();
}

WorldState world_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw IoError(std::string("world snapshot parse failed: ") + e.what());
  }
  if (j.at("version").get<int>() != 1) throw IoError("unsupported world snapshot version");
  WorldState world;
  world.config = world_config_from_json(j.at("config"));
  for (const auto& ju : j.at("uavs")) {
    UavState u;
    u.xy = {ju.at("x").get<double>(), ju.at("y").get<double>()};
    u.energy_j = ju.at("energy_j").get<double>();
    u.active = ju.at("active").get<bool>();
    u.charging_lbd = ju.at("charging_lbd").get<int>();
    world.uavs.push_back(u);
  }
  for (const auto& js : j.at("sensors")) {
    SensorState s;
    s.xy = {js.at("x").get<double>(), js.at("y").get<double>()};
    s.aoi_s = js.at("aoi_s").get<double>();
    world.sensors.push_back(s);
  }
  world.lbd_busy = j.at("lbd_busy").get<std::vector<std::uint8_t>>();
  world.step = j.at("step").get<int>();
  world.rng.set_state(j.at("rng_state").get<std::uint64_t>());
  return world;
}

}  // namespace uavrl
