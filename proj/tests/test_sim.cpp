#include <cmath>

#include "doctest.h"

#include "uavrl/errors.hpp"
#include "uavrl/sim.hpp"

using namespace uavrl;

namespace {

WorldConfig small_world() {
  WorldConfig cfg;
  cfg.width_m = 400.0;
  cfg.height_m = 400.0;
  cfg.num_sensors = 5;
  cfg.num_uavs = 2;
  cfg.station_xy = {200.0, 200.0};
  cfg.horizon_steps = 50;
  cfg.seed = 3;
  return cfg;
}

}  // namespace

TEST_CASE("init_world is deterministic for a fixed seed") {
  WorldConfig cfg;
  cfg.seed = 7;
  const WorldState a = init_world(cfg);
  const WorldState b = init_world(cfg);
  CHECK(world_to_json(a) == world_to_json(b));
}

TEST_CASE("init_world rejects degenerate configs naming the field") {
  WorldConfig cfg;
  cfg.num_sensors = 0;
  CHECK_THROWS_WITH_AS(init_world(cfg), "num_sensors must be >= 1", ConfigError);

  WorldConfig bad_eta;
  bad_eta.eta_pv = 1.5;
  CHECK_THROWS_WITH_AS(init_world(bad_eta), "eta_pv must lie in (0,1]", ConfigError);
}

TEST_CASE("init_world places sensors inside the area and fills batteries") {
  const WorldState world = init_world(WorldConfig{});
  REQUIRE(world.sensors.size() == 50);
  REQUIRE(world.uavs.size() == 4);
  for (const auto& s : world.sensors) {
    CHECK(s.xy.x >= 0.0);
    CHECK(s.xy.x <= 1000.0);
    CHECK(s.xy.y >= 0.0);
    CHECK(s.xy.y <= 1000.0);
    CHECK(s.aoi_s == 0.0);
  }
  for (const auto& u : world.uavs) {
    CHECK(u.energy_j == world.config.battery_capacity_j);
    CHECK(u.xy.x == 500.0);
    CHECK(u.xy.y == 500.0);
    CHECK(u.active);
  }
  CHECK(world.step == 0);
}

TEST_CASE("move_uav covers the eight directions with per-axis clamping") {
  const WorldConfig cfg;  // v=5, dt=4 -> 20 m per step
  const Vec2 mid{500.0, 500.0};

  const Vec2 east = move_uav(mid, kEast, cfg);
  CHECK(east.x == doctest::Approx(520.0).epsilon(1e-15));
  CHECK(east.y == 500.0);

  const Vec2 ne = move_uav(mid, kNorthEast, cfg);
  CHECK(ne.x == doctest::Approx(514.1421356237309).epsilon(1e-13));
  CHECK(ne.y == doctest::Approx(514.1421356237309).epsilon(1e-13));

  const Vec2 clamped = move_uav({995.0, 500.0}, kEast, cfg);
  CHECK(clamped.x == 1000.0);
  CHECK(clamped.y == 500.0);

  CHECK_THROWS_AS(move_uav(mid, 8, cfg), ArgumentError);
}

TEST_CASE("assign_lbds serves in-zone UAVs lowest energy first") {
  WorldConfig cfg;
  cfg.num_uavs = 4;
  WorldState world = init_world(cfg);

  SUBCASE("all four in zone with ten LBDs") {
    assign_lbds(world);
    for (const auto& u : world.uavs) CHECK(u.charging_lbd >= 0);
    int busy = 0;
    for (auto b : world.lbd_busy) busy += b;
    CHECK(busy == 4);
  }

  SUBCASE("strict radius test at 250.01 m") {
    world.uavs[0].xy = {500.0 + 250.01, 500.0};
    assign_lbds(world);
    CHECK(world.uavs[0].charging_lbd == -1);
    CHECK(world.uavs[1].charging_lbd >= 0);
  }

  SUBCASE("two beams, three eligible: lowest energies win") {
    WorldConfig c2 = cfg;
    c2.num_lbds = 2;
    WorldState w2 = init_world(c2);
    w2.uavs[0].energy_j = 10000.0;
    w2.uavs[1].energy_j = 5000.0;
    w2.uavs[2].energy_j = 7000.0;
    w2.uavs[3].xy = {0.0, 0.0};  // out of zone
    assign_lbds(w2);
    CHECK(w2.uavs[0].charging_lbd == -1);
    CHECK(w2.uavs[1].charging_lbd >= 0);
    CHECK(w2.uavs[2].charging_lbd >= 0);
    CHECK(w2.uavs[3].charging_lbd == -1);
  }
}

TEST_CASE("step charges an in-zone UAV by eta*P*dt - p_move*dt") {
  WorldConfig cfg;
  cfg.num_uavs = 1;
  WorldState world = init_world(cfg);
  world.uavs[0].energy_j = 100000.0;
  const StepOutcome out = step(world, {kEast});
  CHECK(out.consumed_j[0] == 1400.0);  // 350 W * 4 s
  CHECK(out.charged_j[0] == 6000.0);   // 0.15 * 10 kW * 4 s
  CHECK(world.uavs[0].energy_j == 104600.0);
}

TEST_CASE("collection resets the in-range sensor and ages the rest") {
  WorldConfig cfg = small_world();
  cfg.num_uavs = 1;
  cfg.comm_range_m = 100.0;
  WorldState world = init_world(cfg);
  // age everything a little first
  world.uavs[0].xy = {0.0, 0.0};
  for (auto& s : world.sensors) s.xy = {390.0, 390.0};
  (void)step(world, {kSouthWest});
  for (const auto& s : world.sensors) CHECK(s.aoi_s == 4.0);

  // park one sensor 30 m east of the UAV
  world.sensors[2].xy = {world.uavs[0].xy.x + 30.0, world.uavs[0].xy.y};
  const StepOutcome out = step(world, {kSouthWest});  // clamped: stays at origin
  CHECK(world.sensors[2].aoi_s == 0.0);
  for (int k = 0; k < cfg.num_sensors; ++k) {
    if (k != 2) CHECK(world.sensors[k].aoi_s == 8.0);
  }
  REQUIRE(out.collections.size() == 1);
  CHECK(out.collections[0].first == 0);
  CHECK(out.collections[0].second == 2);
}

TEST_CASE("stepping a finished world is a state error") {
  WorldConfig cfg = small_world();
  cfg.horizon_steps = 1;
  WorldState world = init_world(cfg);
  (void)step(world, {0, 0});
  CHECK(world.done());
  CHECK_THROWS_AS(step(world, JointAction{0, 0}), StateError);
}

TEST_CASE("observe layout, normalization and mask sentinel") {
  WorldConfig cfg;
  cfg.num_uavs = 1;
  WorldState world = init_world(cfg);

  const auto obs = observe(world, 0);
  REQUIRE(static_cast<int>(obs.size()) == 5 + cfg.num_sensors);
  CHECK(obs[0] == 0.5);
  CHECK(obs[1] == 0.5);
  CHECK(obs[2] == 1.0);
  CHECK(obs[3 + cfg.num_sensors] == 0.0);
  CHECK(obs[4 + cfg.num_sensors] == 0.0);

  // sensor 0 at 150 m: masked; sensor 1 in range at half the AoI cap
  world.sensors[0].xy = {650.0, 500.0};
  world.sensors[0].aoi_s = 123.0;
  world.sensors[1].xy = {550.0, 500.0};
  world.sensors[1].aoi_s = cfg.aoi_cap_s / 2.0;
  const auto obs2 = observe(world, 0);
  CHECK(obs2[3 + 0] == -1.0);
  CHECK(obs2[3 + 1] == 0.5);

  CHECK_THROWS_AS(observe(world, 1), ArgumentError);
}

TEST_CASE("global_state length and AoI normalization") {
  WorldState world = init_world(WorldConfig{});
  auto gs = global_state(world);
  REQUIRE(static_cast<int>(gs.size()) == 3 * 4 + 50);
  for (int k = 0; k < 50; ++k) CHECK(gs[12 + k] == 0.0);

  // ten uncollected steps at dt=4 with cap 2000 -> 0.02
  for (auto& s : world.sensors) s.aoi_s = 40.0;
  gs = global_state(world);
  for (int k = 0; k < 50; ++k) CHECK(gs[12 + k] == doctest::Approx(0.02).epsilon(1e-15));
}

TEST_CASE("reward combines the AoI mean, collection bonus and death penalty") {
  WorldConfig cfg;
  WorldState world = init_world(cfg);

  SUBCASE("fresh world, no events") {
    const auto [team, locals] = reward(world, {}, std::vector<std::uint8_t>(4, 0));
    CHECK(team == 0.0);
    for (double l : locals) CHECK(l == 0.0);
  }

  SUBCASE("every sensor at the cap") {
    for (auto& s : world.sensors) s.aoi_s = cfg.aoi_cap_s;
    const auto [team, locals] = reward(world, {}, std::vector<std::uint8_t>(4, 0));
    CHECK(team == doctest::Approx(-1.0).epsilon(1e-15));
    (void)locals;
  }

  SUBCASE("depletion penalty lands on the depleted agent only") {
    std::vector<std::uint8_t> depleted{0, 0, 1, 0};
    const auto [team, locals] = reward(world, {}, depleted);
    CHECK(team == 0.0);
    CHECK(locals == std::vector<double>{0.0, 0.0, -10.0, 0.0});
  }

  SUBCASE("collection bonus scales with credited pairs") {
    std::vector<std::pair<int, int>> pairs{{0, 1}, {1, 2}};
    const auto [team, locals] = reward(world, pairs, std::vector<std::uint8_t>(4, 0));
    CHECK(team == doctest::Approx(0.5 * 2.0 / 50.0).epsilon(1e-15));
    (void)locals;
  }
}

TEST_CASE("three-step ledger for a corner-pinned UAV") {
  WorldConfig cfg;
  cfg.num_uavs = 1;
  cfg.comm_range_m = 1e-6;  // nothing collects
  WorldState world = init_world(cfg);
  world.uavs[0].xy = {0.0, 0.0};  // far outside the charge zone

  const double cap = cfg.battery_capacity_j;
  for (int t = 1; t <= 3; ++t) {
    const StepOutcome out = step(world, {kSouthWest});
    CHECK(world.uavs[0].xy.x == 0.0);
    CHECK(world.uavs[0].xy.y == 0.0);
    CHECK(world.uavs[0].energy_j == cap - 1400.0 * t);
    CHECK(out.charged_j[0] == 0.0);
    for (const auto& s : world.sensors) CHECK(s.aoi_s == 4.0 * t);
    const double expected_team = -(4.0 * t / 2000.0);
    CHECK(out.team_reward == doctest::Approx(expected_team).epsilon(1e-15));
  }
}

TEST_CASE("identical action sequences give bit-identical trajectories") {
  const WorldConfig cfg = small_world();
  SplitMix64 action_rng(99);
  std::vector<JointAction> plan;
  for (int t = 0; t < 50; ++t) {
    JointAction a(cfg.num_uavs);
    for (auto& x : a) x = action_rng.uniform_int(8);
    plan.push_back(a);
  }
  WorldState w1 = init_world(cfg);
  WorldState w2 = init_world(cfg);
  for (const auto& a : plan) {
    (void)step(w1, a);
    (void)step(w2, a);
    REQUIRE(world_to_json(w1) == world_to_json(w2));
  }
}

TEST_CASE("world snapshots round-trip bit-exactly") {
  WorldConfig cfg = small_world();
  WorldState world = init_world(cfg);
  for (int t = 0; t < 20; ++t) (void)step(world, JointAction(cfg.num_uavs, t % 8));
  const std::string j = world_to_json(world);
  const WorldState restored = world_from_json(j);
  CHECK(world_to_json(restored) == j);
  CHECK(restored.uavs[0].xy.x == world.uavs[0].xy.x);
  CHECK(restored.rng.state() == world.rng.state());
}

TEST_CASE("environment invariants hold over randomized worlds") {
  SplitMix64 meta(42);
  for (int trial = 0; trial < 20; ++trial) {
    WorldConfig cfg;
    cfg.width_m = meta.uniform(50.0, 800.0);
    cfg.height_m = meta.uniform(50.0, 800.0);
    cfg.num_sensors = 1 + meta.uniform_int(20);
    cfg.num_uavs = 1 + meta.uniform_int(4);
    cfg.num_lbds = 1 + meta.uniform_int(5);
    cfg.station_xy = {cfg.width_m / 2, cfg.height_m / 2};
    cfg.charge_radius_m = meta.uniform(20.0, 200.0);
    cfg.comm_range_m = meta.uniform(10.0, 150.0);
    cfg.battery_capacity_j = meta.uniform(5000.0, 100000.0);
    cfg.horizon_steps = 120;
    cfg.seed = meta.next();

    WorldState world = init_world(cfg);
    auto prev = world;
    JointAction action(cfg.num_uavs);
    while (!world.done()) {
      for (auto& a : action) a = meta.uniform_int(8);
      const StepOutcome out = step(world, action);

      int busy = 0, charging = 0;
      for (auto b : world.lbd_busy) busy += b;
      for (int i = 0; i < cfg.num_uavs; ++i) {
        const auto& u = world.uavs[i];
        const auto& p = prev.uavs[i];
        // exact energy recurrence
        const double expected =
            std::min(std::max(p.energy_j - out.consumed_j[i] + out.charged_j[i], 0.0),
                     cfg.battery_capacity_j);
        if (p.active) {
          REQUIRE(u.energy_j == expected);
        } else {
          // absorbing inactivity
          REQUIRE(u.energy_j == p.energy_j);
          REQUIRE(u.xy.x == p.xy.x);
          REQUIRE(u.xy.y == p.xy.y);
          REQUIRE(!u.active);
        }
        REQUIRE(u.xy.x >= 0.0);
        REQUIRE(u.xy.x <= cfg.width_m);
        REQUIRE(u.xy.y >= 0.0);
        REQUIRE(u.xy.y <= cfg.height_m);
        if (u.charging_lbd >= 0) ++charging;
        if (out.charged_j[i] > 0.0) REQUIRE((u.charging_lbd >= 0 || out.depleted[i]));
      }
      REQUIRE(busy == charging);
      REQUIRE(busy <= cfg.num_lbds);
      for (int k = 0; k < cfg.num_sensors; ++k) {
        const double a0 = prev.sensors[k].aoi_s;
        const double a1 = world.sensors[k].aoi_s;
        REQUIRE((a1 == 0.0 || a1 == a0 + cfg.dt_s));
        REQUIRE(a1 <= world.step * cfg.dt_s);
      }
      prev = world;
    }
  }
}
