#include "uavrl/runconfig.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "uavrl/errors.hpp"

namespace uavrl {

namespace {

using json = nlohmann::ordered_json;

std::pair<int, int> line_column(const std::string& text, std::size_t byte) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

// Section reader with a strict schema: every key present must be consumed.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + " must be an object");
  }

  ~Section() = default;

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      (void)value;
      if (!claimed_.count(key)) {
        throw ConfigError("unknown key '" + path_ + "." + key + "'");
      }
    }
  }

  bool has(const std::string& key) {
    claimed_.insert(key);
    return j_.contains(key);
  }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(path_ + "." + key + " must be a number");
    return v.get<double>();
  }

  int integer(const std::string& key, int fallback) {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_number_integer()) throw ConfigError(path_ + "." + key + " must be an integer");
    return v.get<int>();
  }

  std::int64_t integer64(const std::string& key, std::int64_t fallback) {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_number_integer()) throw ConfigError(path_ + "." + key + " must be an integer");
    return v.get<std::int64_t>();
  }

  std::uint64_t uinteger(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_number_integer()) throw ConfigError(path_ + "." + key + " must be an integer");
    return v.get<std::uint64_t>();
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_boolean()) throw ConfigError(path_ + "." + key + " must be a boolean");
    return v.get<bool>();
  }

  std::string text(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_string()) throw ConfigError(path_ + "." + key + " must be a string");
    return v.get<std::string>();
  }

  std::vector<double> number_list(const std::string& key, std::vector<double> fallback) {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_array()) throw ConfigError(path_ + "." + key + " must be an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) throw ConfigError(path_ + "." + key + " must be an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  std::vector<std::uint64_t> seed_list(const std::string& key, std::vector<std::uint64_t> fallback) {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_array()) throw ConfigError(path_ + "." + key + " must be an array of integers");
    std::vector<std::uint64_t> out;
    for (const auto& e : v) {
      if (!e.is_number_integer()) throw ConfigError(path_ + "." + key + " must be an array of integers");
      out.push_back(e.get<std::uint64_t>());
    }
    return out;
  }

  const json& raw(const std::string& key) {
    claimed_.insert(key);
    return j_.at(key);
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> claimed_;
};

WorldConfig parse_world(const json& j) {
  WorldConfig c;
  Section s(j, "world");
  c.width_m = s.number("width_m", c.width_m);
  c.height_m = s.number("height_m", c.height_m);
  c.num_sensors = s.integer("num_sensors", c.num_sensors);
  c.num_uavs = s.integer("num_uavs", c.num_uavs);
  c.altitude_m = s.number("altitude_m", c.altitude_m);
  c.cruise_speed_mps = s.number("cruise_speed_mps", c.cruise_speed_mps);
  c.dt_s = s.number("dt_s", c.dt_s);
  c.horizon_steps = s.integer("horizon_steps", c.horizon_steps);
  c.comm_range_m = s.number("comm_range_m", c.comm_range_m);
  if (s.has("station_xy")) {
    const auto& v = s.raw("station_xy");
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
      throw ConfigError("world.station_xy must be a [x, y] number pair");
    }
    c.station_xy = {v[0].get<double>(), v[1].get<double>()};
  }
  c.charge_radius_m = s.number("charge_radius_m", c.charge_radius_m);
  c.num_lbds = s.integer("num_lbds", c.num_lbds);
  c.laser_tx_power_w = s.number("laser_tx_power_w", c.laser_tx_power_w);
  c.eta_pv = s.number("eta_pv", c.eta_pv);
  c.battery_capacity_j = s.number("battery_capacity_j", c.battery_capacity_j);
  c.p_move_w = s.number("p_move_w", c.p_move_w);
  c.p_hover_w = s.number("p_hover_w", c.p_hover_w);
  c.aoi_cap_s = s.number("aoi_cap_s", c.aoi_cap_s);
  c.c_collect = s.number("c_collect", c.c_collect);
  c.c_dead = s.number("c_dead", c.c_dead);
  c.seed = s.uinteger("seed", c.seed);
  s.finish();
  return c;
}

TrainConfig parse_train(const json& j) {
  TrainConfig c;
  Section s(j, "train");
  c.gamma = s.number("gamma", c.gamma);
  c.gae_lambda = s.number("gae_lambda", c.gae_lambda);
  c.clip_eps = s.number("clip_eps", c.clip_eps);
  c.ppo_epochs = s.integer("ppo_epochs", c.ppo_epochs);
  c.chunk_len = s.integer("chunk_len", c.chunk_len);
  c.minibatch_chunks = s.integer("minibatch_chunks", c.minibatch_chunks);
  c.entropy_coef = s.number("entropy_coef", c.entropy_coef);
  c.value_coef = s.number("value_coef", c.value_coef);
  c.lr = s.number("lr", c.lr);
  c.grad_clip_norm = s.number("grad_clip_norm", c.grad_clip_norm);
  c.rollout_len = s.integer("rollout_len", c.rollout_len);
  c.num_parallel_envs = s.integer("num_parallel_envs", c.num_parallel_envs);
  c.total_env_steps = s.integer64("total_env_steps", c.total_env_steps);
  c.eval_every = s.integer64("eval_every", c.eval_every);
  c.seed = s.uinteger("seed", c.seed);
  c.net.hidden = s.integer("hidden_dim", c.net.hidden);
  c.net.embed = s.integer("embed_dim", c.net.embed);
  c.net.value_hidden = s.integer("value_hidden_dim", c.net.value_hidden);
  c.net.use_lstm = s.boolean("use_lstm", c.net.use_lstm);
  c.net.dual_attention = s.boolean("dual_attention", c.net.dual_attention);
  s.finish();
  return c;
}

}  // namespace

void RunConfig::validate() const {
  world.validate();
  train.validate();
  if (eval.n_episodes < 1) throw ConfigError("eval.n_episodes must be >= 1");
  if (sweep.etas.empty()) throw ConfigError("sweep.etas must not be empty");
  for (std::size_t i = 0; i < sweep.etas.size(); ++i) {
    if (sweep.etas[i] <= 0.0 || sweep.etas[i] > 1.0) throw ConfigError("eta_pv must lie in (0,1]");
    if (i > 0 && sweep.etas[i] <= sweep.etas[i - 1]) {
      throw ConfigError("sweep.etas must be strictly increasing");
    }
  }
  if (sweep.seeds.empty()) throw ConfigError("sweep.seeds must not be empty");
}

std::vector<std::uint64_t> RunConfig::eval_seeds() const {
  if (!eval.seeds.empty()) return eval.seeds;
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < eval.n_episodes; ++i) seeds.push_back(world.seed + static_cast<std::uint64_t>(i));
  return seeds;
}

RunConfig parse_run_config(const std::string& text) {
  RunConfig cfg;
  std::string trimmed = text;
  trimmed.erase(0, trimmed.find_first_not_of(" \t\r\n"));
  if (trimmed.empty()) {
    cfg.validate();
    return cfg;
  }

  json j;
  try {
    j = json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte > 0 ? e.byte - 1 : 0);
    throw ConfigError("config parse error at line " + std::to_string(line) + ", column " +
                      std::to_string(col) + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config document must be a JSON object");

  Section root(j, "config");
  if (root.has("world")) cfg.world = parse_world(root.raw("world"));
  if (root.has("train")) cfg.train = parse_train(root.raw("train"));
  if (root.has("eval")) {
    Section s(root.raw("eval"), "eval");
    cfg.eval.n_episodes = s.integer("n_episodes", cfg.eval.n_episodes);
    cfg.eval.seeds = s.seed_list("seeds", cfg.eval.seeds);
    s.finish();
  }
  if (root.has("sweep")) {
    Section s(root.raw("sweep"), "sweep");
    cfg.sweep.etas = s.number_list("etas", cfg.sweep.etas);
    cfg.sweep.seeds = s.seed_list("seeds", cfg.sweep.seeds);
    s.finish();
  }
  if (root.has("paths")) {
    Section s(root.raw("paths"), "paths");
    cfg.paths.run_dir = s.text("run_dir", cfg.paths.run_dir);
    cfg.paths.checkpoint_in = s.text("checkpoint_in", cfg.paths.checkpoint_in);
    s.finish();
  }
  if (root.has("algorithm")) {
    const auto& v = root.raw("algorithm");
    if (!v.is_string()) throw ConfigError("algorithm must be a string");
    cfg.algorithm = algorithm_from_name(v.get<std::string>());
  }
  root.finish();

  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

nlohmann::ordered_json run_config_to_json(const RunConfig& cfg) {
  json j;
  j["world"] = world_config_to_json(cfg.world);
  j["train"] = train_config_to_json(cfg.train);
  j["eval"] = {{"n_episodes", cfg.eval.n_episodes}, {"seeds", cfg.eval.seeds}};
  j["sweep"] = {{"etas", cfg.sweep.etas}, {"seeds", cfg.sweep.seeds}};
  j["paths"] = {{"run_dir", cfg.paths.run_dir}, {"checkpoint_in", cfg.paths.checkpoint_in}};
  j["algorithm"] = algorithm_name(cfg.algorithm);
  return j;
}

std::string config_hash(const RunConfig& cfg) {
  // canonicalize: sorted keys, no whitespace; output paths carry no
  // experiment semantics and stay out of the digest
  nlohmann::json canonical = nlohmann::json::parse(run_config_to_json(cfg).dump());
  canonical.erase("paths");
  return fnv1a_hex(canonical.dump());
}

WorldConfig world_preset(const std::string& name) {
  if (name == "default") return WorldConfig{};
  if (name == "tiny") return tiny_preset();
  if (name == "scaled") {
    WorldConfig cfg;
    cfg.width_m = 500.0;
    cfg.height_m = 500.0;
    cfg.num_sensors = 10;
    cfg.num_uavs = 2;
    cfg.station_xy = {250.0, 250.0};
    return cfg;
  }
  throw ConfigError("unknown world preset '" + name + "' (default|tiny|scaled)");
}

}  // namespace uavrl
