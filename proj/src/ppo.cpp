#include "uavrl/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "uavrl/errors.hpp"

namespace uavrl {

using ag::Tensor;

std::string algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::kMappoTm: return "mappo_tm";
    case Algorithm::kMappo: return "mappo";
    case Algorithm::kGreedy: return "greedy";
    case Algorithm::kRandom: return "random";
  }
  throw ArgumentError("unknown algorithm enum");
}

Algorithm algorithm_from_name(const std::string& name) {
  if (name == "mappo_tm") return Algorithm::kMappoTm;
  if (name == "mappo") return Algorithm::kMappo;
  if (name == "greedy") return Algorithm::kGreedy;
  if (name == "random") return Algorithm::kRandom;
  throw ConfigError("algorithm must be one of mappo_tm|mappo|greedy|random, got '" + name + "'");
}

std::string world_hash(const WorldConfig& cfg) {
  const nlohmann::json canonical = nlohmann::json::parse(world_config_to_json(cfg).dump());
  return fnv1a_hex(canonical.dump());
}

namespace {

struct ChunkUnit {
  int env = 0;
  int window = 0;
};

}  // namespace

UpdateStats ppo_update(RolloutBuffer& b, ActorNet& actor, CriticNet& critic, ag::Adam& adam,
                       const TrainConfig& cfg, SplitMix64& rng) {
  const int L = b.chunk_len;
  const int windows = b.T / L;
  const int A = b.A;

  normalize_advantages(b.advantages);

  std::vector<ChunkUnit> units;
  units.reserve(static_cast<std::size_t>(b.E) * windows);
  for (int e = 0; e < b.E; ++e)
    for (int w = 0; w < windows; ++w) units.push_back({e, w});

  auto actor_masters = actor.named_params();
  auto critic_masters = critic.named_params();
  std::vector<Tensor*> master_ptrs;
  for (auto& [n, t] : actor_masters) master_ptrs.push_back(t);
  for (auto& [n, t] : critic_masters) master_ptrs.push_back(t);

  UpdateStats stats;
  double sum_policy = 0.0, sum_value = 0.0, sum_entropy = 0.0;
  std::int64_t minibatches_done = 0;
  std::int64_t clip_hits = 0, clip_total = 0;

  for (int epoch = 0; epoch < cfg.ppo_epochs; ++epoch) {
    // Fisher-Yates shuffle of the chunk units
    for (int i = static_cast<int>(units.size()) - 1; i > 0; --i) {
      const int j = rng.uniform_int(i + 1);
      std::swap(units[i], units[j]);
    }

    for (std::size_t start = 0; start < units.size(); start += cfg.minibatch_chunks) {
      const int n_units = static_cast<int>(
          std::min<std::size_t>(cfg.minibatch_chunks, units.size() - start));
      const int rows = n_units * A;

      ag::Tape tape;
      ActorNet actor_h = actor.watch(tape);
      CriticNet critic_h = critic.watch(tape);

      // chunk-start recurrent state
      Tensor h(rows, b.hidden), c(rows, b.hidden);
      for (int u = 0; u < n_units; ++u) {
        const auto& unit = units[start + u];
        for (int a = 0; a < A; ++a) {
          std::copy_n(b.hid_h.begin() + b.hid_idx(unit.window, unit.env, a), b.hidden,
                      h.data.begin() + static_cast<std::size_t>(u * A + a) * b.hidden);
          std::copy_n(b.hid_c.begin() + b.hid_idx(unit.window, unit.env, a), b.hidden,
                      c.data.begin() + static_cast<std::size_t>(u * A + a) * b.hidden);
        }
      }

      std::vector<Tensor> picked_steps, entropy_steps;
      picked_steps.reserve(L);
      entropy_steps.reserve(L);
      std::vector<double> old_logp, adv_elems;
      old_logp.reserve(static_cast<std::size_t>(L) * rows);
      adv_elems.reserve(static_cast<std::size_t>(L) * rows);

      for (int tl = 0; tl < L; ++tl) {
        Tensor obs(rows, b.d_obs);
        Tensor onehot(rows, kNumActions);
        bool any_done = false;
        for (int u = 0; u < n_units; ++u) {
          const auto& unit = units[start + u];
          const int tg = unit.window * L + tl;
          for (int a = 0; a < A; ++a) {
            const int row = u * A + a;
            std::copy_n(b.obs.begin() + b.obs_idx(tg, unit.env, a), b.d_obs,
                        obs.data.begin() + static_cast<std::size_t>(row) * b.d_obs);
            const auto i = b.idx(tg, unit.env, a);
            onehot.at(row, b.actions[i]) = 1.0;
            old_logp.push_back(b.logp[i]);
            adv_elems.push_back(b.advantages[i]);
            if (b.dones[i]) any_done = true;
          }
        }

        const ActorOut out = actor_forward(tape, actor_h, obs, h, c);
        picked_steps.push_back(tape.row_sum(tape.mul(out.logp, onehot)));
        entropy_steps.push_back(tape.scale(tape.row_sum(tape.mul(out.probs, out.logp)), -1.0));
        h = out.h;
        c = out.c;

        if (any_done && tl + 1 < L) {
          // zero recurrent state across episode boundaries, as in collection
          Tensor mask(rows, 1);
          for (int u = 0; u < n_units; ++u) {
            const auto& unit = units[start + u];
            const int tg = unit.window * L + tl;
            for (int a = 0; a < A; ++a) {
              mask.data[u * A + a] = b.dones[b.idx(tg, unit.env, a)] ? 0.0 : 1.0;
            }
          }
          h = tape.mul(h, mask);
          c = tape.mul(c, mask);
        }
      }

      Tensor new_logp = tape.concat_rows(picked_steps);                  // (L*rows, 1)
      Tensor entropy = tape.mean_all(tape.concat_rows(entropy_steps));   // (1,1)
      Tensor old_logp_t(static_cast<int>(old_logp.size()), 1, old_logp);
      Tensor adv_t(static_cast<int>(adv_elems.size()), 1, adv_elems);

      Tensor ratio = tape.exp(tape.sub(new_logp, old_logp_t));
      Tensor surr1 = tape.mul(ratio, adv_t);
      Tensor surr2 = tape.mul(tape.clamp(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps), adv_t);
      Tensor policy_loss = tape.scale(tape.mean_all(tape.minimum(surr1, surr2)), -1.0);

      // critic pass per (unit, step); each yields every agent's blended value
      std::vector<Tensor> value_parts;
      value_parts.reserve(static_cast<std::size_t>(n_units) * L);
      std::vector<double> return_elems;
      return_elems.reserve(static_cast<std::size_t>(n_units) * L * A);
      for (int u = 0; u < n_units; ++u) {
        const auto& unit = units[start + u];
        for (int tl = 0; tl < L; ++tl) {
          const int tg = unit.window * L + tl;
          Tensor gs(1, b.d_state,
                    std::vector<double>(b.gstate.begin() + b.gstate_idx(tg, unit.env),
                                        b.gstate.begin() + b.gstate_idx(tg, unit.env) + b.d_state));
          const CriticOut crit = critic_forward(tape, critic_h, gs);
          value_parts.push_back(crit.v_blend);
          for (int a = 0; a < A; ++a) return_elems.push_back(b.returns[b.idx(tg, unit.env, a)]);
        }
      }
      Tensor values = tape.concat_rows(value_parts);
      Tensor returns_t(static_cast<int>(return_elems.size()), 1, return_elems);
      Tensor vdiff = tape.sub(values, returns_t);
      Tensor value_loss = tape.mean_all(tape.mul(vdiff, vdiff));

      Tensor total = tape.add(policy_loss, tape.sub(tape.scale(value_loss, cfg.value_coef),
                                                    tape.scale(entropy, cfg.entropy_coef)));
      if (!std::isfinite(total.item())) {
        throw NumericError("ppo_update: non-finite loss at epoch " + std::to_string(epoch) +
                           ", minibatch " + std::to_string(minibatches_done));
      }
      tape.backward(total);

      std::vector<Tensor> grads;
      grads.reserve(master_ptrs.size());
      for (auto& [n, t] : actor_h.named_params()) grads.push_back(tape.grad(*t));
      for (auto& [n, t] : critic_h.named_params()) grads.push_back(tape.grad(*t));
      adam.step(master_ptrs, std::move(grads), cfg.grad_clip_norm);

      for (int i = 0; i < ratio.size(); ++i) {
        if (std::abs(ratio.data[i] - 1.0) > cfg.clip_eps) ++clip_hits;
      }
      clip_total += ratio.size();
      sum_policy += policy_loss.item();
      sum_value += value_loss.item();
      sum_entropy += entropy.item();

      if (epoch == 0 && start == 0) {
        double drift = 0.0, rdev = 0.0, adv_mean = 0.0;
        for (int i = 0; i < new_logp.size(); ++i) {
          drift = std::max(drift, std::abs(new_logp.data[i] - old_logp_t.data[i]));
          rdev = std::max(rdev, std::abs(ratio.data[i] - 1.0));
          adv_mean += adv_t.data[i];
        }
        stats.first_mb_max_logp_drift = drift;
        stats.first_mb_max_ratio_minus_one = rdev;
        stats.first_mb_policy_loss = policy_loss.item();
        stats.first_mb_mean_advantage = adv_mean / new_logp.size();
      }
      ++minibatches_done;
    }
  }

  stats.policy_loss = sum_policy / minibatches_done;
  stats.value_loss = sum_value / minibatches_done;
  stats.entropy = sum_entropy / minibatches_done;
  stats.clip_fraction = clip_total > 0 ? static_cast<double>(clip_hits) / clip_total : 0.0;
  stats.alpha = critic.cfg.dual_attention
                    ? 1.0 / (1.0 + std::exp(-critic.blend_w.data[0]))
                    : std::numeric_limits<double>::quiet_NaN();
  return stats;
}

ActorController::ActorController(ActorNet actor) : actor_(std::move(actor)) {}

void ActorController::reset(const WorldState& world) {
  h_ = Tensor(world.config.num_uavs, actor_.cfg.hidden);
  c_ = Tensor(world.config.num_uavs, actor_.cfg.hidden);
}

JointAction ActorController::act(const WorldState& world) {
  const int A = world.config.num_uavs;
  const int d_obs = 5 + world.config.num_sensors;
  if (h_.rows != A) reset(world);
  Tensor obs(A, d_obs);
  for (int a = 0; a < A; ++a) {
    const auto o = observe(world, a);
    std::copy(o.begin(), o.end(), obs.data.begin() + static_cast<std::size_t>(a) * d_obs);
  }
  ag::Tape notape(/*grad_enabled=*/false);
  const ActorOut out = actor_forward(notape, actor_, obs, h_, c_);
  h_ = out.h;
  c_ = out.c;
  JointAction actions(A);
  for (int a = 0; a < A; ++a) {
    actions[a] = greedy_action(out.probs.data.data() + static_cast<std::size_t>(a) * kNumActions,
                               kNumActions);
  }
  return actions;
}

EvalSummary evaluate(const WorldConfig& world_cfg,
                     const std::function<std::unique_ptr<Controller>()>& make_controller,
                     int n_episodes, const std::vector<std::uint64_t>& seeds,
                     const std::function<void(int, const EpisodeLog&)>& per_episode) {
  if (n_episodes < 1) throw ArgumentError("evaluate: n_episodes must be >= 1");
  if (seeds.empty()) throw ArgumentError("evaluate: seed list must not be empty");
  EvalSummary summary;
  for (int i = 0; i < n_episodes; ++i) {
    WorldConfig cfg = world_cfg;
    cfg.seed = seeds[i % seeds.size()] + 1000003ULL * static_cast<std::uint64_t>(i / seeds.size());
    auto controller = make_controller();
    EpisodeLog log = run_episode(init_world(cfg), *controller);
    EvalEpisode ep;
    ep.seed = cfg.seed;
    ep.episode_return = episode_return(log);
    ep.peak_aoi_s = peak_aoi(log);
    ep.mean_aoi_s = mean_aoi(log);
    ep.depletions = depletion_count(log);
    summary.episodes.push_back(ep);
    if (per_episode) per_episode(i, log);
  }
  const double n = static_cast<double>(summary.episodes.size());
  std::vector<double> peaks, depl;
  for (const auto& ep : summary.episodes) {
    summary.mean_return += ep.episode_return;
    summary.mean_peak_aoi += ep.peak_aoi_s;
    summary.mean_aoi += ep.mean_aoi_s;
    summary.mean_depletions += ep.depletions;
    peaks.push_back(ep.peak_aoi_s);
    depl.push_back(ep.depletions);
  }
  summary.mean_return /= n;
  summary.mean_peak_aoi /= n;
  summary.mean_aoi /= n;
  summary.mean_depletions /= n;
  summary.median_peak_aoi = median(peaks);
  double var = 0.0;
  for (const auto& ep : summary.episodes) {
    var += (ep.episode_return - summary.mean_return) * (ep.episode_return - summary.mean_return);
  }
  summary.std_return = std::sqrt(var / n);
  std::sort(depl.begin(), depl.end());
  summary.median_depletions = static_cast<int>(depl[(depl.size() - 1) / 2]);  // lower median
  return summary;
}

Trainer::Trainer(const WorldConfig& world_cfg, const TrainConfig& train_cfg, Algorithm algo)
    : world_cfg_(world_cfg), train_cfg_(train_cfg), algo_(algo) {
  world_cfg_.validate();
  if (algo == Algorithm::kGreedy || algo == Algorithm::kRandom) {
    throw ArgumentError("Trainer requires a learnable algorithm (mappo_tm or mappo)");
  }
  if (algo == Algorithm::kMappo) {
    train_cfg_.net.use_lstm = false;
    train_cfg_.net.dual_attention = false;
  }
  train_cfg_.validate();

  const int d_obs = 5 + world_cfg_.num_sensors;
  actor_ = ActorNet::init(d_obs, train_cfg_.net, SplitMix64::mix(train_cfg_.seed, 0xAC));
  critic_ = CriticNet::init(world_cfg_.num_uavs, world_cfg_.num_sensors, train_cfg_.net,
                            SplitMix64::mix(train_cfg_.seed, 0xC1));
  adam_ = ag::Adam(ag::AdamConfig{.lr = train_cfg_.lr});
  envs_.resize(train_cfg_.num_parallel_envs);
  for (auto& slot : envs_) slot.world = init_world(world_cfg_);
  hidden_ = HiddenStates::zeros(train_cfg_.num_parallel_envs * world_cfg_.num_uavs,
                                train_cfg_.net.hidden);
  rng_ = SplitMix64(SplitMix64::mix(train_cfg_.seed, 0x57));
}

TrainLogRecord Trainer::iterate() {
  RolloutBuffer buffer;
  const CollectResult collected =
      collect_rollout(envs_, hidden_, actor_, critic_, train_cfg_, rng_, buffer);
  env_steps_ += static_cast<std::int64_t>(train_cfg_.rollout_len) * train_cfg_.num_parallel_envs;
  compute_gae(buffer, train_cfg_.gamma, train_cfg_.gae_lambda);
  const UpdateStats stats = ppo_update(buffer, actor_, critic_, adam_, train_cfg_, rng_);

  if (!collected.completed_episode_returns.empty()) {
    double mean = 0.0;
    for (double r : collected.completed_episode_returns) mean += r;
    last_mean_episode_reward_ = mean / collected.completed_episode_returns.size();
  }

  TrainLogRecord rec;
  rec.env_steps = env_steps_;
  rec.mean_episode_reward = last_mean_episode_reward_;
  rec.policy_loss = stats.policy_loss;
  rec.value_loss = stats.value_loss;
  rec.entropy = stats.entropy;
  rec.clip_fraction = stats.clip_fraction;
  rec.alpha = stats.alpha;
  rec.wall_clock_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time_).count();
  return rec;
}

void Trainer::run(const Hooks& hooks) {
  std::vector<std::uint64_t> eval_seeds = hooks.eval_seeds;
  if (eval_seeds.empty()) {
    for (int i = 0; i < std::max(1, hooks.eval_episodes); ++i) {
      eval_seeds.push_back(world_cfg_.seed + static_cast<std::uint64_t>(i));
    }
  }
  std::int64_t eval_marker = env_steps_ / train_cfg_.eval_every;
  while (env_steps_ < train_cfg_.total_env_steps) {
    const TrainLogRecord rec = iterate();
    if (hooks.on_record) hooks.on_record(rec);
    const std::int64_t marker = env_steps_ / train_cfg_.eval_every;
    const bool finished = env_steps_ >= train_cfg_.total_env_steps;
    if (marker != eval_marker || finished) {
      eval_marker = marker;
      if (hooks.on_eval) {
        ActorNet snapshot = actor_;
        const EvalSummary summary = evaluate(
            world_cfg_, [&] { return std::make_unique<ActorController>(snapshot); },
            std::max(1, hooks.eval_episodes), eval_seeds);
        hooks.on_eval(env_steps_, summary);
      }
      if (hooks.on_checkpoint) hooks.on_checkpoint(env_steps_, *this);
    }
  }
}

ParamArchive Trainer::make_checkpoint() const {
  ParamArchive archive;
  ActorNet& a = const_cast<ActorNet&>(actor_);
  CriticNet& c = const_cast<CriticNet&>(critic_);
  for (auto& [name, t] : a.named_params()) archive.params.emplace(name, *t);
  for (auto& [name, t] : c.named_params()) archive.params.emplace(name, *t);

  // Adam moments, keyed by parameter name in named order
  const auto& m = adam_.first_moments();
  const auto& v = adam_.second_moments();
  if (!m.empty()) {
    std::vector<std::string> names;
    for (auto& [name, t] : a.named_params()) names.push_back(name);
    for (auto& [name, t] : c.named_params()) names.push_back(name);
    for (std::size_t i = 0; i < names.size(); ++i) {
      archive.params.emplace("adam.m." + names[i], m[i]);
      archive.params.emplace("adam.v." + names[i], v[i]);
    }
  }

  nlohmann::ordered_json man;
  man["kind"] = "uavrl_trainer_checkpoint";
  man["algorithm"] = algorithm_name(algo_);
  man["env_steps"] = env_steps_;
  man["adam_steps"] = adam_.step_count();
  man["world"] = world_config_to_json(world_cfg_);
  man["train"] = train_config_to_json(train_cfg_);
  man["world_hash"] = world_hash(world_cfg_);
  man["seed"] = train_cfg_.seed;

  nlohmann::ordered_json state;
  nlohmann::ordered_json env_snaps = nlohmann::ordered_json::array();
  for (const auto& slot : envs_) {
    env_snaps.push_back({{"world", nlohmann::ordered_json::parse(world_to_json(slot.world))},
                         {"episode_return_b64", doubles_to_base64({slot.episode_return})},
                         {"episode_len", slot.episode_len}});
  }
  state["envs"] = std::move(env_snaps);
  state["hidden_h"] = doubles_to_base64(hidden_.h.data);
  state["hidden_c"] = doubles_to_base64(hidden_.c.data);
  state["hidden_rows"] = hidden_.h.rows;
  state["hidden_cols"] = hidden_.h.cols;
  state["rng_state"] = rng_.state();
  state["last_mean_episode_reward_b64"] = doubles_to_base64({last_mean_episode_reward_});
  man["trainer_state"] = std::move(state);
  archive.manifest = std::move(man);
  return archive;
}

Trainer Trainer::from_checkpoint(const ParamArchive& archive) {
  const auto& man = archive.manifest;
  if (!man.contains("kind") || man.at("kind").get<std::string>() != "uavrl_trainer_checkpoint") {
    throw IoError("archive is not a trainer checkpoint");
  }
  Trainer t(world_config_from_json(man.at("world")), train_config_from_json(man.at("train")),
            algorithm_from_name(man.at("algorithm").get<std::string>()));
  t.env_steps_ = man.at("env_steps").get<std::int64_t>();

  auto load_into = [&](std::vector<std::pair<std::string, Tensor*>> named) {
    for (auto& [name, dst] : named) {
      auto it = archive.params.find(name);
      if (it == archive.params.end()) throw IoError("checkpoint is missing parameter " + name);
      if (it->second.rows != dst->rows || it->second.cols != dst->cols) {
        throw IoError("checkpoint parameter " + name + " has shape " + it->second.shape_str() +
                      ", expected " + dst->shape_str());
      }
      dst->data = it->second.data;
    }
  };
  load_into(t.actor_.named_params());
  load_into(t.critic_.named_params());

  const std::int64_t adam_steps = man.at("adam_steps").get<std::int64_t>();
  if (adam_steps > 0) {
    std::vector<Tensor> m, v;
    std::vector<std::string> names;
    for (auto& [name, p] : t.actor_.named_params()) names.push_back(name);
    for (auto& [name, p] : t.critic_.named_params()) names.push_back(name);
    for (const auto& name : names) {
      auto im = archive.params.find("adam.m." + name);
      auto iv = archive.params.find("adam.v." + name);
      if (im == archive.params.end() || iv == archive.params.end()) {
        throw IoError("checkpoint is missing Adam state for " + name);
      }
      m.push_back(im->second);
      v.push_back(iv->second);
    }
    t.adam_.restore(std::move(m), std::move(v), adam_steps);
  }

  const auto& state = man.at("trainer_state");
  const auto& env_snaps = state.at("envs");
  if (env_snaps.size() != t.envs_.size()) throw IoError("checkpoint env count mismatch");
  for (std::size_t e = 0; e < t.envs_.size(); ++e) {
    t.envs_[e].world = world_from_json(env_snaps[e].at("world").dump());
    t.envs_[e].episode_return =
        doubles_from_base64(env_snaps[e].at("episode_return_b64").get<std::string>())[0];
    t.envs_[e].episode_len = env_snaps[e].at("episode_len").get<int>();
  }
  t.hidden_.h = Tensor(state.at("hidden_rows").get<int>(), state.at("hidden_cols").get<int>(),
                       doubles_from_base64(state.at("hidden_h").get<std::string>()));
  t.hidden_.c = Tensor(state.at("hidden_rows").get<int>(), state.at("hidden_cols").get<int>(),
                       doubles_from_base64(state.at("hidden_c").get<std::string>()));
  t.rng_.set_state(state.at("rng_state").get<std::uint64_t>());
  t.last_mean_episode_reward_ =
      doubles_from_base64(state.at("last_mean_episode_reward_b64").get<std::string>())[0];
  return t;
}

}  // namespace uavrl
