#pragma once

#include <string>
#include <vector>

#include "uavrl/ppo.hpp"

namespace uavrl {

struct EvalSection {
  int n_episodes = 5;
  std::vector<std::uint64_t> seeds;  // empty: derived from the world seed
};

struct SweepSection {
  std::vector<double> etas{0.10, 0.15, 0.20, 0.25};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
};

struct PathsSection {
  std::string run_dir;
  std::string checkpoint_in;
};

struct RunConfig {
  WorldConfig world;
  TrainConfig train;
  EvalSection eval;
  SweepSection sweep;
  PathsSection paths;
  Algorithm algorithm = Algorithm::kMappoTm;

  void validate() const;
  std::vector<std::uint64_t> eval_seeds() const;  // resolved seed list
};

// Strict parse of the JSON config document: unknown keys are fatal and named
// with their path, missing keys fall back to defaults, parse errors carry
// line/column. An empty document yields the full default config.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);

nlohmann::ordered_json run_config_to_json(const RunConfig& cfg);

// Stable digest of the canonicalized (key-sorted) config document.
std::string config_hash(const RunConfig& cfg);

// Named world presets: "default", "tiny" (oracle-sized), "scaled"
// (500x500 m, 10 sensors, 2 UAVs).
WorldConfig world_preset(const std::string& name);

}  // namespace uavrl
