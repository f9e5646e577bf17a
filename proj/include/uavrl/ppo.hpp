#pragma once

#include <chrono>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "uavrl/adam.hpp"
#include "uavrl/checkpoint.hpp"
#include "uavrl/metrics.hpp"
#include "uavrl/rollout.hpp"

namespace uavrl {

enum class Algorithm { kMappoTm, kMappo, kGreedy, kRandom };

std::string algorithm_name(Algorithm a);
Algorithm algorithm_from_name(const std::string& name);

// Digest of the canonicalized (key-sorted) world config; stamps checkpoints
// so evaluation can refuse incompatible worlds.
std::string world_hash(const WorldConfig& cfg);

struct TrainLogRecord {
  std::int64_t env_steps = 0;
  double mean_episode_reward = 0.0;  // NaN until an episode completes
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double alpha = 0.0;  // NaN for the vanilla critic
  double wall_clock_s = 0.0;
};

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double alpha = 0.0;
  // epoch-0 / minibatch-0 diagnostics (parameters still untouched there)
  double first_mb_max_logp_drift = 0.0;   // |recomputed - stored| log-probs
  double first_mb_max_ratio_minus_one = 0.0;
  double first_mb_policy_loss = 0.0;
  double first_mb_mean_advantage = 0.0;
};

// Clipped-surrogate PPO over shuffled chunk minibatches; the LSTM re-unrolls
// from the stored chunk-start hidden states. Normalizes advantages once over
// the whole buffer, then runs ppo_epochs passes of Adam steps.
UpdateStats ppo_update(RolloutBuffer& buffer, ActorNet& actor, CriticNet& critic,
                       ag::Adam& adam, const TrainConfig& cfg, SplitMix64& rng);

// Greedy decoding of a trained actor, one hidden state per agent.
class ActorController : public Controller {
 public:
  explicit ActorController(ActorNet actor);
  void reset(const WorldState& world) override;
  JointAction act(const WorldState& world) override;

 private:
  ActorNet actor_;
  ag::Tensor h_, c_;
};

struct EvalEpisode {
  std::uint64_t seed = 0;
  double episode_return = 0.0;
  double peak_aoi_s = 0.0;
  double mean_aoi_s = 0.0;
  int depletions = 0;
};

struct EvalSummary {
  std::vector<EvalEpisode> episodes;
  double mean_return = 0.0, std_return = 0.0;
  double mean_peak_aoi = 0.0, median_peak_aoi = 0.0;
  double mean_aoi = 0.0;
  double mean_depletions = 0.0;
  int median_depletions = 0;
};

// Greedy-action evaluation episodes. Episode i uses seeds[i % seeds.size()],
// offset deterministically when i wraps past the list.
EvalSummary evaluate(const WorldConfig& world_cfg,
                     const std::function<std::unique_ptr<Controller>()>& make_controller,
                     int n_episodes, const std::vector<std::uint64_t>& seeds,
                     const std::function<void(int, const EpisodeLog&)>& per_episode = {});

// Full MAPPO / MAPPO-TM training loop: alternate collect and update, with
// periodic greedy evaluations and checkpoints. Resumable bit-exactly from a
// checkpoint in single-worker mode (wall-clock fields aside).
class Trainer {
 public:
  struct Hooks {
    std::function<void(const TrainLogRecord&)> on_record;
    std::function<void(std::int64_t, const EvalSummary&)> on_eval;
    std::function<void(std::int64_t, Trainer&)> on_checkpoint;
    // evaluation episode controls; falls back to eval_episodes/eval seeds
    int eval_episodes = 3;
    std::vector<std::uint64_t> eval_seeds;
  };

  Trainer(const WorldConfig& world_cfg, const TrainConfig& train_cfg, Algorithm algo);

  TrainLogRecord iterate();   // one collect + update cycle
  void run(const Hooks& hooks);

  ParamArchive make_checkpoint() const;
  static Trainer from_checkpoint(const ParamArchive& archive);

  const ActorNet& actor() const { return actor_; }
  const CriticNet& critic() const { return critic_; }
  ActorNet& actor() { return actor_; }
  std::int64_t env_steps() const { return env_steps_; }
  Algorithm algorithm() const { return algo_; }
  const WorldConfig& world_config() const { return world_cfg_; }
  const TrainConfig& train_config() const { return train_cfg_; }

 private:
  Trainer() = default;

  WorldConfig world_cfg_;
  TrainConfig train_cfg_;
  Algorithm algo_ = Algorithm::kMappoTm;
  ActorNet actor_;
  CriticNet critic_;
  ag::Adam adam_;
  std::vector<EnvSlot> envs_;
  HiddenStates hidden_;
  SplitMix64 rng_;
  std::int64_t env_steps_ = 0;
  double last_mean_episode_reward_ = std::numeric_limits<double>::quiet_NaN();
  std::chrono::steady_clock::time_point start_time_ = std::chrono::steady_clock::now();
};

}  // namespace uavrl
