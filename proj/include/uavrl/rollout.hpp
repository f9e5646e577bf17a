#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "uavrl/nets.hpp"
#include "uavrl/sim.hpp"

namespace uavrl {

struct TrainConfig {
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip_eps = 0.2;
  int ppo_epochs = 4;
  int chunk_len = 16;          // BPTT window; must divide rollout_len
  int minibatch_chunks = 16;   // (env, window) units per minibatch
  double entropy_coef = 0.01;
  double value_coef = 0.5;
  double lr = 3e-4;
  double grad_clip_norm = 0.5;
  int rollout_len = 128;
  int num_parallel_envs = 8;
  std::int64_t total_env_steps = 200000;
  std::int64_t eval_every = 20000;  // env steps between greedy evaluations
  std::uint64_t seed = 1;
  NetConfig net;

  void validate() const;
};

// Time-major storage for one collection phase. Leading dims are
// (rollout_len, num_envs, num_agents); hidden snapshots are kept at every
// chunk boundary for BPTT re-unrolls.
struct RolloutBuffer {
  int T = 0, E = 0, A = 0;
  int d_obs = 0, d_state = 0, hidden = 0, chunk_len = 0;

  std::vector<double> obs;       // [T][E][A][d_obs]
  std::vector<int> actions;      // [T][E][A]
  std::vector<double> logp;      // [T][E][A]
  std::vector<double> rewards;   // [T][E][A]
  std::vector<double> values;    // [T][E][A]
  std::vector<std::uint8_t> dones;  // [T][E][A] (episode-level, replicated)
  std::vector<double> gstate;    // [T][E][d_state]
  std::vector<double> hid_h;     // [T/chunk][E][A][hidden]
  std::vector<double> hid_c;     // [T/chunk][E][A][hidden]
  std::vector<double> bootstrap; // [E][A]
  std::vector<double> advantages;  // [T][E][A]
  std::vector<double> returns;     // [T][E][A]

  RolloutBuffer() = default;
  RolloutBuffer(int t, int e, int a, int d_obs, int d_state, int hidden, int chunk_len);

  std::size_t idx(int t, int e, int a) const {
    return (static_cast<std::size_t>(t) * E + e) * A + a;
  }
  std::size_t obs_idx(int t, int e, int a) const { return idx(t, e, a) * d_obs; }
  std::size_t gstate_idx(int t, int e) const {
    return (static_cast<std::size_t>(t) * E + e) * static_cast<std::size_t>(d_state);
  }
  std::size_t hid_idx(int window, int e, int a) const {
    return ((static_cast<std::size_t>(window) * E + e) * A + a) * static_cast<std::size_t>(hidden);
  }
};

// delta_t = r_t + gamma*(1-done_t)*V_{t+1} - V_t
// A_t = delta_t + gamma*lambda*(1-done_t)*A_{t+1}; returns = A + V.
// Raw (unnormalized) advantages; normalization happens once per update.
void compute_gae(std::span<const double> rewards, std::span<const double> values,
                 std::span<const std::uint8_t> dones, double bootstrap_value, double gamma,
                 double lambda, std::span<double> advantages, std::span<double> returns);

// GAE over every (env, agent) stream of the buffer.
void compute_gae(RolloutBuffer& buffer, double gamma, double lambda);

// In-place mean-0 / std-1 normalization with a 1e-8 floor on the std.
void normalize_advantages(std::vector<double>& advantages);

// One environment lane of the vectorized rollout. Worlds restart from the
// same configured layout when an episode finishes.
struct EnvSlot {
  WorldState world;
  double episode_return = 0.0;  // running sum of mean-over-agents reward
  int episode_len = 0;
};

// Per-(env,agent) recurrent state, stored as flat (E*A, hidden) matrices.
struct HiddenStates {
  ag::Tensor h;
  ag::Tensor c;

  static HiddenStates zeros(int rows, int hidden);
  void reset_env(int env, int num_agents);  // zero one env's rows
};

struct CollectResult {
  std::vector<double> completed_episode_returns;
  std::vector<int> completed_episode_lengths;
};

// rollout_len steps of (observe -> act -> step -> record) across all envs.
// Hidden states are zeroed wherever an episode ends; worlds reset in place.
CollectResult collect_rollout(std::vector<EnvSlot>& envs, HiddenStates& hidden,
                              const ActorNet& actor, const CriticNet& critic,
                              const TrainConfig& cfg, SplitMix64& rng, RolloutBuffer& buffer);

nlohmann::ordered_json train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::ordered_json& j);

}  // namespace uavrl
