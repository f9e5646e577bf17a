#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "uavrl/baselines.hpp"
#include "uavrl/sim.hpp"

namespace uavrl {

// One step of an episode trace. `aoi` holds each sensor's age at collection
// time for that step (previous age + dt), so a sensor collected every step
// still shows the dt it accrued before each reset.
struct StepRecord {
  int step = 0;
  std::vector<double> uav_x, uav_y, energy_j;
  std::vector<std::uint8_t> charging;
  std::vector<std::uint8_t> active;
  std::vector<double> aoi;
  std::vector<std::pair<int, int>> collections;
  double team_reward = 0.0;
  std::vector<double> agent_rewards;
};

struct EpisodeLog {
  int num_uavs = 0;
  int num_sensors = 0;
  double dt_s = 0.0;
  std::vector<StepRecord> steps;
};

// Runs the controller to the horizon on a copy of the world.
EpisodeLog run_episode(WorldState world, Controller& controller);

double peak_aoi(const EpisodeLog& log);
double mean_aoi(const EpisodeLog& log);
// undiscounted sum over steps of the mean-over-agents reward
double episode_return(const EpisodeLog& log);
// UAVs inactive at the end of the episode
int depletion_count(const EpisodeLog& log);

// CSV with a config-hash provenance comment, one row per (step, uav).
// Doubles use full round-trip precision.
void export_trajectory(const EpisodeLog& log, std::ostream& out, const std::string& config_hash);
void export_trajectory_file(const EpisodeLog& log, const std::string& path,
                            const std::string& config_hash);

struct TrajectoryRow {
  int step = 0;
  int uav_id = 0;
  double x = 0.0, y = 0.0, energy_j = 0.0;
  int charging = 0;
  std::vector<int> collected_ids;
};
std::vector<TrajectoryRow> import_trajectory(std::istream& in);

using ControllerFactory = std::function<std::unique_ptr<Controller>(const WorldConfig&)>;

struct SweepResult {
  std::vector<double> etas;
  std::vector<std::vector<double>> peak_aoi_per_seed;  // [eta][seed]
  std::vector<double> median_peak_aoi;                 // [eta]
};

// Overrides eta_pv per value, runs one greedy/scripted episode per seed and
// aggregates peak AoI. Seeds are shared across etas so comparisons pair up.
SweepResult efficiency_sweep(const ControllerFactory& make_controller,
                             const std::vector<double>& etas,
                             const std::vector<std::uint64_t>& seeds, const WorldConfig& base);

std::string sweep_to_json(const SweepResult& result, const std::string& config_hash);

double median(std::vector<double> values);
// Spearman rank correlation with average ranks on ties.
double spearman_rho(const std::vector<double>& xs, const std::vector<double>& ys);

struct OracleResult {
  double best_return = 0.0;
  std::vector<int> best_sequence;
  std::int64_t sequences_evaluated = 0;
};

// Exhaustive search over all 8^horizon single-UAV action sequences. Returns
// the maximum undiscounted return and the lexicographically smallest argmax.
OracleResult brute_force_oracle(const WorldConfig& config, int horizon);

// replay helper: undiscounted return of a fixed action sequence
double replay_return(const WorldConfig& config, const std::vector<int>& sequence);

// 40x40 m world, 1 UAV, 2 sensors, short horizon; small enough to enumerate.
WorldConfig tiny_preset();

}  // namespace uavrl
