#pragma once

#include <memory>

#include "uavrl/rng.hpp"
#include "uavrl/sim.hpp"

namespace uavrl {

struct ScriptedConfig {
  // head back to the station below this fraction of battery capacity
  double energy_return_threshold = 0.4;
};

// Rule-based baseline: return to the station when low on energy, otherwise
// chase the max-AoI sensor (ties: nearest, then lowest index). Movement is
// the direction whose clamped one-step result lands closest to the target.
int scripted_greedy_action(const WorldState& world, int agent, const ScriptedConfig& cfg);

// Per-episode action source used by evaluation and simulation runs.
class Controller {
 public:
  virtual ~Controller() = default;
  virtual void reset(const WorldState& world) { (void)world; }
  virtual JointAction act(const WorldState& world) = 0;
};

class RandomController : public Controller {
 public:
  explicit RandomController(std::uint64_t seed) : rng_(seed) {}
  JointAction act(const WorldState& world) override;

 private:
  SplitMix64 rng_;
};

class GreedyController : public Controller {
 public:
  explicit GreedyController(ScriptedConfig cfg = {}) : cfg_(cfg) {}
  JointAction act(const WorldState& world) override;

 private:
  ScriptedConfig cfg_;
};

}  // namespace uavrl
