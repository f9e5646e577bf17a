#include <string>

#include "doctest.h"

#include "uavrl/runconfig.hpp"

using namespace uavrl;

TEST_CASE("an empty document yields the paper-default config") {
  const RunConfig cfg = parse_run_config("");
  CHECK(cfg.world.eta_pv == 0.15);
  CHECK(cfg.world.num_lbds == 10);
  CHECK(cfg.world.width_m == 1000.0);
  CHECK(cfg.world.num_sensors == 50);
  CHECK(cfg.world.num_uavs == 4);
  CHECK(cfg.world.charge_radius_m == 250.0);
  CHECK(cfg.world.altitude_m == 80.0);
  CHECK(cfg.world.cruise_speed_mps == 5.0);
  CHECK(cfg.train.gamma == 0.99);
  CHECK(cfg.train.clip_eps == 0.2);
  CHECK(cfg.algorithm == Algorithm::kMappoTm);
}

TEST_CASE("validation names the offending field") {
  CHECK_THROWS_WITH_AS(parse_run_config(R"({"world": {"eta_pv": 1.5}})"),
                       "eta_pv must lie in (0,1]", ConfigError);
  CHECK_THROWS_WITH_AS(parse_run_config(R"({"world": {"eta_pv": 0.0}})"),
                       "eta_pv must lie in (0,1]", ConfigError);
}

TEST_CASE("unknown keys are fatal and carry their path") {
  try {
    parse_run_config(R"({"world": {"charg_radius_m": 250.0}})");
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("charg_radius_m") != std::string::npos);
    CHECK(std::string(e.what()).find("world.") != std::string::npos);
  }

  CHECK_THROWS_AS(parse_run_config(R"({"wurld": {}})"), ConfigError);
}

TEST_CASE("type errors and parse errors carry locations") {
  CHECK_THROWS_WITH_AS(parse_run_config(R"({"world": {"num_sensors": 5.5}})"),
                       "world.num_sensors must be an integer", ConfigError);
  try {
    parse_run_config("{\n  \"world\": {\n    \"dt_s\": ,\n  }\n}");
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("line 3") != std::string::npos);
  }
}

TEST_CASE("partial documents override only what they mention") {
  const RunConfig cfg = parse_run_config(R"({
    "world": {"num_sensors": 10, "num_uavs": 2, "seed": 4},
    "train": {"lr": 0.001, "use_lstm": false},
    "algorithm": "mappo"
  })");
  CHECK(cfg.world.num_sensors == 10);
  CHECK(cfg.world.num_uavs == 2);
  CHECK(cfg.world.seed == 4);
  CHECK(cfg.world.eta_pv == 0.15);  // untouched default
  CHECK(cfg.train.lr == 0.001);
  CHECK(!cfg.train.net.use_lstm);
  CHECK(cfg.algorithm == Algorithm::kMappo);
}

TEST_CASE("config hash is stable under key reordering and whitespace") {
  const RunConfig a = parse_run_config(R"({"world": {"num_sensors": 8, "seed": 2}})");
  const RunConfig b = parse_run_config(R"({
       "world": {


         "seed": 2,   "num_sensors": 8}})");
  CHECK(config_hash(a) == config_hash(b));

  const RunConfig c = parse_run_config(R"({"world": {"num_sensors": 9, "seed": 2}})");
  CHECK(config_hash(a) != config_hash(c));
}

TEST_CASE("config documents round-trip through their JSON form") {
  RunConfig cfg = parse_run_config(R"({
    "world": {"num_sensors": 12, "eta_pv": 0.25},
    "sweep": {"etas": [0.1, 0.2], "seeds": [9, 8]},
    "eval": {"n_episodes": 3, "seeds": [5]},
    "algorithm": "greedy"
  })");
  const std::string dumped = run_config_to_json(cfg).dump();
  const RunConfig back = parse_run_config(dumped);
  CHECK(config_hash(back) == config_hash(cfg));
  CHECK(back.sweep.etas == cfg.sweep.etas);
  CHECK(back.eval.seeds == cfg.eval.seeds);
  CHECK(back.algorithm == Algorithm::kGreedy);
}

TEST_CASE("world presets") {
  const WorldConfig tiny = world_preset("tiny");
  CHECK(tiny.num_uavs == 1);
  CHECK(tiny.num_sensors == 2);
  CHECK(tiny.horizon_steps == 6);

  const WorldConfig scaled = world_preset("scaled");
  CHECK(scaled.width_m == 500.0);
  CHECK(scaled.num_sensors == 10);
  CHECK(scaled.num_uavs == 2);
  CHECK(scaled.charge_radius_m == 250.0);

  CHECK_THROWS_AS(world_preset("nope"), ConfigError);
}

TEST_CASE("eval seeds derive from the world seed when unset") {
  RunConfig cfg = parse_run_config(R"({"world": {"seed": 100}, "eval": {"n_episodes": 3}})");
  const auto seeds = cfg.eval_seeds();
  REQUIRE(seeds.size() == 3);
  CHECK(seeds[0] == 100);
  CHECK(seeds[1] == 101);
  CHECK(seeds[2] == 102);
}
