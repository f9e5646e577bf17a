#include "uavrl/rollout.hpp"

#include <algorithm>
#include <cmath>

#include "nlohmann/json.hpp"

#include "uavrl/errors.hpp"

namespace uavrl {

void TrainConfig::validate() const {
  if (gamma <= 0.0 || gamma > 1.0) throw ConfigError("gamma must lie in (0,1]");
  if (gae_lambda < 0.0 || gae_lambda > 1.0) throw ConfigError("gae_lambda must lie in [0,1]");
  if (clip_eps <= 0.0) throw ConfigError("clip_eps must be > 0");
  if (ppo_epochs < 1) throw ConfigError("ppo_epochs must be >= 1");
  if (chunk_len < 1) throw ConfigError("chunk_len must be >= 1");
  if (rollout_len < 1) throw ConfigError("rollout_len must be >= 1");
  if (rollout_len % chunk_len != 0) throw ConfigError("chunk_len must divide rollout_len");
  if (minibatch_chunks < 1) throw ConfigError("minibatch_chunks must be >= 1");
  if (entropy_coef < 0.0) throw ConfigError("entropy_coef must be >= 0");
  if (value_coef < 0.0) throw ConfigError("value_coef must be >= 0");
  if (lr < 0.0) throw ConfigError("lr must be >= 0");
  if (num_parallel_envs < 1) throw ConfigError("num_parallel_envs must be >= 1");
  if (total_env_steps < 1) throw ConfigError("total_env_steps must be >= 1");
  if (eval_every < 1) throw ConfigError("eval_every must be >= 1");
  if (net.hidden < 1 || net.embed < 1 || net.value_hidden < 1) {
    throw ConfigError("network widths must be >= 1");
  }
}

RolloutBuffer::RolloutBuffer(int t, int e, int a, int d_obs_, int d_state_, int hidden_,
                             int chunk_len_)
    : T(t), E(e), A(a), d_obs(d_obs_), d_state(d_state_), hidden(hidden_), chunk_len(chunk_len_) {
  const std::size_t n = static_cast<std::size_t>(T) * E * A;
  obs.assign(n * d_obs, 0.0);
  actions.assign(n, 0);
  logp.assign(n, 0.0);
  rewards.assign(n, 0.0);
  values.assign(n, 0.0);
  dones.assign(n, 0);
  gstate.assign(static_cast<std::size_t>(T) * E * d_state, 0.0);
  const int windows = T / chunk_len;
  hid_h.assign(static_cast<std::size_t>(windows) * E * A * hidden, 0.0);
  hid_c.assign(static_cast<std::size_t>(windows) * E * A * hidden, 0.0);
  bootstrap.assign(static_cast<std::size_t>(E) * A, 0.0);
  advantages.assign(n, 0.0);
  returns.assign(n, 0.0);
}

void compute_gae(std::span<const double> rewards, std::span<const double> values,
                 std::span<const std::uint8_t> dones, double bootstrap_value, double gamma,
                 double lambda, std::span<double> advantages, std::span<double> returns) {
  const std::size_t n = rewards.size();
  if (values.size() != n || dones.size() != n || advantages.size() != n || returns.size() != n) {
    throw ShapeError("compute_gae: sequence lengths differ");
  }
  double gae = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    const double not_done = dones[i] ? 0.0 : 1.0;
    const double next_value = (i + 1 < n) ? values[i + 1] : bootstrap_value;
    const double delta = rewards[i] + gamma * not_done * next_value - values[i];
    gae = delta + gamma * lambda * not_done * gae;
    advantages[i] = gae;
    returns[i] = gae + values[i];
  }
}

void compute_gae(RolloutBuffer& b, double gamma, double lambda) {
  std::vector<double> r(b.T), v(b.T), adv(b.T), ret(b.T);
  std::vector<std::uint8_t> d(b.T);
  for (int e = 0; e < b.E; ++e) {
    for (int a = 0; a < b.A; ++a) {
      for (int t = 0; t < b.T; ++t) {
        const auto i = b.idx(t, e, a);
        r[t] = b.rewards[i];
        v[t] = b.values[i];
        d[t] = b.dones[i];
      }
      compute_gae(r, v, d, b.bootstrap[static_cast<std::size_t>(e) * b.A + a], gamma, lambda, adv,
                  ret);
      for (int t = 0; t < b.T; ++t) {
        const auto i = b.idx(t, e, a);
        b.advantages[i] = adv[t];
        b.returns[i] = ret[t];
      }
    }
  }
}

void normalize_advantages(std::vector<double>& advantages) {
  if (advantages.empty()) return;
  const double n = static_cast<double>(advantages.size());
  double mean = 0.0;
  for (double v : advantages) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : advantages) var += (v - mean) * (v - mean);
  const double std = std::sqrt(var / n);
  for (double& v : advantages) v = (v - mean) / (std + 1e-8);
}

HiddenStates HiddenStates::zeros(int rows, int hidden) {
  return {ag::Tensor(rows, hidden), ag::Tensor(rows, hidden)};
}

void HiddenStates::reset_env(int env, int num_agents) {
  for (int a = 0; a < num_agents; ++a) {
    const int row = env * num_agents + a;
    std::fill_n(h.data.begin() + static_cast<std::size_t>(row) * h.cols, h.cols, 0.0);
    std::fill_n(c.data.begin() + static_cast<std::size_t>(row) * c.cols, c.cols, 0.0);
  }
}

CollectResult collect_rollout(std::vector<EnvSlot>& envs, HiddenStates& hidden,
                              const ActorNet& actor, const CriticNet& critic,
                              const TrainConfig& cfg, SplitMix64& rng, RolloutBuffer& buffer) {
  const int E = static_cast<int>(envs.size());
  if (E == 0) throw ArgumentError("collect_rollout: no environments");
  const int A = envs[0].world.config.num_uavs;
  const int T = cfg.rollout_len;
  const int d_obs = 5 + envs[0].world.config.num_sensors;
  const int d_state = 3 * A + envs[0].world.config.num_sensors;

  buffer = RolloutBuffer(T, E, A, d_obs, d_state, cfg.net.hidden, cfg.chunk_len);
  CollectResult result;

  ag::Tape notape(/*grad_enabled=*/false);
  ag::Tensor obs_mat(E * A, d_obs);

  for (int t = 0; t < T; ++t) {
    // snapshot recurrent state at chunk boundaries
    if (t % cfg.chunk_len == 0) {
      const int w = t / cfg.chunk_len;
      for (int e = 0; e < E; ++e) {
        for (int a = 0; a < A; ++a) {
          const int row = e * A + a;
          std::copy_n(hidden.h.data.begin() + static_cast<std::size_t>(row) * cfg.net.hidden,
                      cfg.net.hidden, buffer.hid_h.begin() + buffer.hid_idx(w, e, a));
          std::copy_n(hidden.c.data.begin() + static_cast<std::size_t>(row) * cfg.net.hidden,
                      cfg.net.hidden, buffer.hid_c.begin() + buffer.hid_idx(w, e, a));
        }
      }
    }

    // observations for every (env, agent) row
    for (int e = 0; e < E; ++e) {
      const auto gs = global_state(envs[e].world);
      std::copy(gs.begin(), gs.end(), buffer.gstate.begin() + buffer.gstate_idx(t, e));
      for (int a = 0; a < A; ++a) {
        const auto o = observe(envs[e].world, a);
        std::copy(o.begin(), o.end(), buffer.obs.begin() + buffer.obs_idx(t, e, a));
        std::copy(o.begin(), o.end(),
                  obs_mat.data.begin() + static_cast<std::size_t>(e * A + a) * d_obs);
      }
    }

    const ActorOut act = actor_forward(notape, actor, obs_mat, hidden.h, hidden.c);
    hidden.h = act.h;
    hidden.c = act.c;

    for (int e = 0; e < E; ++e) {
      // blended values for all agents of this env in one critic pass
      ag::Tensor gs_row(1, d_state,
                        std::vector<double>(buffer.gstate.begin() + buffer.gstate_idx(t, e),
                                            buffer.gstate.begin() + buffer.gstate_idx(t, e) + d_state));
      const CriticOut crit = critic_forward(notape, critic, gs_row);

      JointAction joint(A);
      for (int a = 0; a < A; ++a) {
        const int row = e * A + a;
        auto [action, lp] = sample_action(act.probs.data.data() + static_cast<std::size_t>(row) * kNumActions,
                                          kNumActions, rng);
        (void)lp;
        joint[a] = action;
        const auto i = buffer.idx(t, e, a);
        buffer.actions[i] = action;
        buffer.logp[i] = act.logp.at(row, action);  // matches the BPTT recompute bit-for-bit
        buffer.values[i] = crit.v_blend.data[a];
      }

      StepOutcome outcome = step(envs[e].world, joint);
      double mean_reward = 0.0;
      for (int a = 0; a < A; ++a) {
        const auto i = buffer.idx(t, e, a);
        buffer.rewards[i] = outcome.agent_rewards[a];
        buffer.dones[i] = outcome.done ? 1 : 0;
        mean_reward += outcome.agent_rewards[a];
      }
      envs[e].episode_return += mean_reward / A;
      envs[e].episode_len += 1;

      if (outcome.done) {
        result.completed_episode_returns.push_back(envs[e].episode_return);
        result.completed_episode_lengths.push_back(envs[e].episode_len);
        envs[e].world = init_world(envs[e].world.config);
        envs[e].episode_return = 0.0;
        envs[e].episode_len = 0;
        hidden.reset_env(e, A);
      }
    }
  }

  // bootstrap values for the state after the last transition
  for (int e = 0; e < E; ++e) {
    const auto gs = global_state(envs[e].world);
    ag::Tensor gs_row(1, d_state, gs);
    const CriticOut crit = critic_forward(notape, critic, gs_row);
    for (int a = 0; a < A; ++a) {
      buffer.bootstrap[static_cast<std::size_t>(e) * A + a] = crit.v_blend.data[a];
    }
  }
  return result;
}

nlohmann::ordered_json train_config_to_json(const TrainConfig& c) {
  nlohmann::ordered_json j;
  j["gamma"] = c.gamma;
  j["gae_lambda"] = c.gae_lambda;
  j["clip_eps"] = c.clip_eps;
  j["ppo_epochs"] = c.ppo_epochs;
  j["chunk_len"] = c.chunk_len;
  j["minibatch_chunks"] = c.minibatch_chunks;
  j["entropy_coef"] = c.entropy_coef;
  j["value_coef"] = c.value_coef;
  j["lr"] = c.lr;
  j["grad_clip_norm"] = c.grad_clip_norm;
  j["rollout_len"] = c.rollout_len;
  j["num_parallel_envs"] = c.num_parallel_envs;
  j["total_env_steps"] = c.total_env_steps;
  j["eval_every"] = c.eval_every;
  j["seed"] = c.seed;
  j["hidden_dim"] = c.net.hidden;
  j["embed_dim"] = c.net.embed;
  j["value_hidden_dim"] = c.net.value_hidden;
  j["use_lstm"] = c.net.use_lstm;
  j["dual_attention"] = c.net.dual_attention;
  return j;
}

TrainConfig train_config_from_json(const nlohmann::ordered_json& j) {
  TrainConfig c;
  c.gamma = j.at("gamma").get<double>();
  c.gae_lambda = j.at("gae_lambda").get<double>();
  c.clip_eps = j.at("clip_eps").get<double>();
  c.ppo_epochs = j.at("ppo_epochs").get<int>();
  c.chunk_len = j.at("chunk_len").get<int>();
  c.minibatch_chunks = j.at("minibatch_chunks").get<int>();
  c.entropy_coef = j.at("entropy_coef").get<double>();
  c.value_coef = j.at("value_coef").get<double>();
  c.lr = j.at("lr").get<double>();
  c.grad_clip_norm = j.at("grad_clip_norm").get<double>();
  c.rollout_len = j.at("rollout_len").get<int>();
  c.num_parallel_envs = j.at("num_parallel_envs").get<int>();
  c.total_env_steps = j.at("total_env_steps").get<std::int64_t>();
  c.eval_every = j.at("eval_every").get<std::int64_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.net.hidden = j.at("hidden_dim").get<int>();
  c.net.embed = j.at("embed_dim").get<int>();
  c.net.value_hidden = j.at("value_hidden_dim").get<int>();
  c.net.use_lstm = j.at("use_lstm").get<bool>();
  c.net.dual_attention = j.at("dual_attention").get<bool>();
  return c;
}

}  // namespace uavrl
