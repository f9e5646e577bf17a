#include "uavrl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "nlohmann/json.hpp"

#include "uavrl/errors.hpp"

namespace uavrl {

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

EpisodeLog run_episode(WorldState world, Controller& controller) {
  EpisodeLog log;
  log.num_uavs = world.config.num_uavs;
  log.num_sensors = world.config.num_sensors;
  log.dt_s = world.config.dt_s;
  controller.reset(world);
  while (!world.done()) {
    std::vector<double> aoi_before(world.config.num_sensors);
    for (int k = 0; k < world.config.num_sensors; ++k) aoi_before[k] = world.sensors[k].aoi_s;

    const JointAction action = controller.act(world);
    const StepOutcome outcome = step(world, action);

    StepRecord rec;
    rec.step = world.step - 1;
    rec.uav_x.reserve(log.num_uavs);
    for (const auto& u : world.uavs) {
      rec.uav_x.push_back(u.xy.x);
      rec.uav_y.push_back(u.xy.y);
      rec.energy_j.push_back(u.energy_j);
      rec.charging.push_back(u.charging_lbd >= 0 ? 1 : 0);
      rec.active.push_back(u.active ? 1 : 0);
    }
    rec.aoi.resize(log.num_sensors);
    for (int k = 0; k < log.num_sensors; ++k) rec.aoi[k] = aoi_before[k] + world.config.dt_s;
    rec.collections = outcome.collections;
    rec.team_reward = outcome.team_reward;
    rec.agent_rewards = outcome.agent_rewards;
    log.steps.push_back(std::move(rec));
  }
  return log;
}

double peak_aoi(const EpisodeLog& log) {
  if (log.steps.empty()) throw ArgumentError("peak_aoi: empty episode log");
  double peak = 0.0;
  for (const auto& rec : log.steps)
    for (double a : rec.aoi) peak = std::max(peak, a);
  return peak;
}

double mean_aoi(const EpisodeLog& log) {
  if (log.steps.empty()) throw ArgumentError("mean_aoi: empty episode log");
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& rec : log.steps) {
    for (double a : rec.aoi) sum += a;
    n += rec.aoi.size();
  }
  return sum / static_cast<double>(n);
}

double episode_return(const EpisodeLog& log) {
  double total = 0.0;
  for (const auto& rec : log.steps) {
    double mean = 0.0;
    for (double r : rec.agent_rewards) mean += r;
    total += mean / static_cast<double>(rec.agent_rewards.size());
  }
  return total;
}

int depletion_count(const EpisodeLog& log) {
  if (log.steps.empty()) return 0;
  const auto& last = log.steps.back();
  int n = 0;
  for (auto a : last.active)
    if (!a) ++n;
  return n;
}

void export_trajectory(const EpisodeLog& log, std::ostream& out, const std::string& config_hash) {
  out << "# config_hash=" << config_hash << "\n";
  out << "step,uav_id,x,y,energy_j,charging,collected_ids\n";
  for (const auto& rec : log.steps) {
    for (int i = 0; i < log.num_uavs; ++i) {
      out << rec.step << ',' << i << ',' << fmt_double(rec.uav_x[i]) << ','
          << fmt_double(rec.uav_y[i]) << ',' << fmt_double(rec.energy_j[i]) << ','
          << static_cast<int>(rec.charging[i]) << ',';
      bool first = true;
      for (const auto& [uav, sensor] : rec.collections) {
        if (uav != i) continue;
        if (!first) out << ';';
        out << sensor;
        first = false;
      }
      out << '\n';
    }
  }
}

void export_trajectory_file(const EpisodeLog& log, const std::string& path,
                            const std::string& config_hash) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open trajectory file for writing: " + path);
  export_trajectory(log, out, config_hash);
  if (!out) throw IoError("trajectory write failed: " + path);
}

std::vector<TrajectoryRow> import_trajectory(std::istream& in) {
  std::vector<TrajectoryRow> rows;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;  // column header
      continue;
    }
    std::istringstream ss(line);
    std::string field;
    TrajectoryRow row;
    std::getline(ss, field, ',');
    row.step = std::stoi(field);
    std::getline(ss, field, ',');
    row.uav_id = std::stoi(field);
    std::getline(ss, field, ',');
    row.x = std::stod(field);
    std::getline(ss, field, ',');
    row.y = std::stod(field);
    std::getline(ss, field, ',');
    row.energy_j = std::stod(field);
    std::getline(ss, field, ',');
    row.charging = std::stoi(field);
    if (std::getline(ss, field, ',') && !field.empty()) {
      std::istringstream ids(field);
      std::string id;
      while (std::getline(ids, id, ';')) row.collected_ids.push_back(std::stoi(id));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

SweepResult efficiency_sweep(const ControllerFactory& make_controller,
                             const std::vector<double>& etas,
                             const std::vector<std::uint64_t>& seeds, const WorldConfig& base) {
  if (etas.empty()) throw ConfigError("efficiency_sweep: empty eta list");
  for (std::size_t i = 0; i < etas.size(); ++i) {
    if (etas[i] <= 0.0 || etas[i] > 1.0) throw ConfigError("eta_pv must lie in (0,1]");
    if (i > 0 && etas[i] <= etas[i - 1]) throw ConfigError("etas must be strictly increasing");
  }
  if (seeds.empty()) throw ConfigError("efficiency_sweep: empty seed list");

  SweepResult result;
  result.etas = etas;
  for (double eta : etas) {
    WorldConfig cfg = base;
    cfg.eta_pv = eta;
    std::vector<double> peaks;
    for (std::uint64_t seed : seeds) {
      cfg.seed = seed;
      auto controller = make_controller(cfg);
      EpisodeLog log = run_episode(init_world(cfg), *controller);
      peaks.push_back(peak_aoi(log));
    }
    result.median_peak_aoi.push_back(median(peaks));
    result.peak_aoi_per_seed.push_back(std::move(peaks));
  }
  return result;
}

std::string sweep_to_json(const SweepResult& result, const std::string& config_hash) {
  nlohmann::ordered_json j;
  j["version"] = 1;
  j["config_hash"] = config_hash;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < result.etas.size(); ++i) {
    rows.push_back({{"eta_pv", result.etas[i]},
                    {"peak_aoi_per_seed", result.peak_aoi_per_seed[i]},
                    {"median_peak_aoi", result.median_peak_aoi[i]}});
  }
  j["sweep"] = std::move(rows);
  return j.dump(2);
}

double median(std::vector<double> values) {
  if (values.empty()) throw ArgumentError("median: empty input");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& xs) {
  const std::size_t n = xs.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double rank = 0.5 * (i + j) + 1.0;  // 1-based average rank of the tie group
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman_rho(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2) {
    throw ArgumentError("spearman_rho: need two equally sized samples of length >= 2");
  }
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double cov = 0.0, vx = 0.0, vy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    cov += (rx[i] - mx) * (ry[i] - my);
    vx += (rx[i] - mx) * (rx[i] - mx);
    vy += (ry[i] - my) * (ry[i] - my);
  }
  if (vx == 0.0 || vy == 0.0) return 0.0;  // a flat ranking carries no trend
  return cov / std::sqrt(vx * vy);
}

double replay_return(const WorldConfig& config, const std::vector<int>& sequence) {
  WorldState world = init_world(config);
  double total = 0.0;
  for (int a : sequence) {
    const StepOutcome out = step(world, JointAction(config.num_uavs, a));
    double mean = 0.0;
    for (double r : out.agent_rewards) mean += r;
    total += mean / config.num_uavs;
  }
  return total;
}

OracleResult brute_force_oracle(const WorldConfig& config, int horizon) {
  if (config.num_uavs != 1) throw ArgumentError("brute_force_oracle: single-UAV worlds only");
  if (horizon < 0) throw ArgumentError("brute_force_oracle: negative horizon");
  double space = 1.0;
  for (int i = 0; i < horizon; ++i) space *= kNumActions;
  if (space > 1e7) throw ArgumentError("brute_force_oracle: 8^horizon exceeds the 1e7 bound");
  if (horizon > config.horizon_steps) {
    throw ArgumentError("brute_force_oracle: horizon exceeds the world horizon");
  }

  OracleResult result;
  if (horizon == 0) {
    result.sequences_evaluated = 1;
    return result;
  }

  const WorldState initial = init_world(config);
  std::vector<int> seq(horizon, 0);
  bool first = true;
  while (true) {
    WorldState world = initial;
    double total = 0.0;
    for (int t = 0; t < horizon; ++t) {
      const StepOutcome out = step(world, {seq[t]});
      total += out.agent_rewards[0];
    }
    result.sequences_evaluated += 1;
    if (first || total > result.best_return) {
      result.best_return = total;
      result.best_sequence = seq;
      first = false;
    }
    // lexicographic odometer
    int pos = horizon - 1;
    while (pos >= 0 && seq[pos] == kNumActions - 1) {
      seq[pos] = 0;
      --pos;
    }
    if (pos < 0) break;
    seq[pos] += 1;
  }
  return result;
}

WorldConfig tiny_preset() {
  WorldConfig cfg;
  cfg.width_m = 40.0;
  cfg.height_m = 40.0;
  cfg.num_sensors = 2;
  cfg.num_uavs = 1;
  cfg.cruise_speed_mps = 5.0;
  cfg.dt_s = 4.0;
  cfg.horizon_steps = 6;
  cfg.comm_range_m = 15.0;
  cfg.station_xy = {20.0, 20.0};
  cfg.charge_radius_m = 15.0;
  cfg.num_lbds = 1;
  cfg.aoi_cap_s = 24.0;
  cfg.seed = 11;
  return cfg;
}

}  // namespace uavrl
