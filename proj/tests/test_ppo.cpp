#include <cmath>

#include "doctest.h"

#include "uavrl/ppo.hpp"

using namespace uavrl;

namespace {

WorldConfig ppo_world(int horizon = 64) {
  WorldConfig cfg;
  cfg.width_m = 300.0;
  cfg.height_m = 300.0;
  cfg.num_sensors = 4;
  cfg.num_uavs = 2;
  cfg.station_xy = {150.0, 150.0};
  cfg.charge_radius_m = 100.0;
  cfg.horizon_steps = horizon;
  cfg.seed = 9;
  return cfg;
}

TrainConfig ppo_train() {
  TrainConfig cfg;
  cfg.rollout_len = 16;
  cfg.chunk_len = 4;
  cfg.minibatch_chunks = 64;  // one minibatch covers everything
  cfg.num_parallel_envs = 2;
  cfg.net.hidden = 8;
  cfg.net.embed = 8;
  cfg.net.value_hidden = 8;
  cfg.total_env_steps = 96;
  cfg.eval_every = 32;
  cfg.seed = 4;
  return cfg;
}

}  // namespace

TEST_CASE("re-unrolled log-probs equal the stored ones and the first minibatch has ratio 1") {
  Trainer trainer(ppo_world(), ppo_train(), Algorithm::kMappoTm);

  // drive one full collect/update cycle manually to observe the stats
  std::vector<EnvSlot> envs(2);
  for (auto& e : envs) e.world = init_world(ppo_world());
  TrainConfig cfg = ppo_train();
  HiddenStates hidden = HiddenStates::zeros(2 * 2, cfg.net.hidden);
  ActorNet actor = ActorNet::init(5 + 4, cfg.net, 31);
  CriticNet critic = CriticNet::init(2, 4, cfg.net, 32);
  ag::Adam adam(ag::AdamConfig{.lr = cfg.lr});
  SplitMix64 rng(cfg.seed);

  RolloutBuffer buffer;
  (void)collect_rollout(envs, hidden, actor, critic, cfg, rng, buffer);
  compute_gae(buffer, cfg.gamma, cfg.gae_lambda);
  const UpdateStats stats = ppo_update(buffer, actor, critic, adam, cfg, rng);

  CHECK(stats.first_mb_max_logp_drift <= 1e-10);
  CHECK(stats.first_mb_max_ratio_minus_one <= 1e-12);
  CHECK(stats.first_mb_policy_loss ==
        doctest::Approx(-stats.first_mb_mean_advantage).epsilon(1e-12));
  CHECK(stats.clip_fraction >= 0.0);
  CHECK(stats.clip_fraction <= 1.0);
  CHECK(stats.entropy >= 0.0);
  CHECK(stats.entropy <= std::log(8.0) + 1e-12);
  CHECK(stats.alpha > 0.0);
  CHECK(stats.alpha < 1.0);
}

TEST_CASE("zero learning rate leaves parameters untouched") {
  TrainConfig cfg = ppo_train();
  cfg.lr = 0.0;
  std::vector<EnvSlot> envs(2);
  for (auto& e : envs) e.world = init_world(ppo_world());
  HiddenStates hidden = HiddenStates::zeros(2 * 2, cfg.net.hidden);
  ActorNet actor = ActorNet::init(5 + 4, cfg.net, 31);
  CriticNet critic = CriticNet::init(2, 4, cfg.net, 32);
  ag::Adam adam(ag::AdamConfig{.lr = 0.0});
  SplitMix64 rng(cfg.seed);

  std::vector<double> before;
  for (auto& [n, t] : actor.named_params()) before.insert(before.end(), t->data.begin(), t->data.end());
  for (auto& [n, t] : critic.named_params()) before.insert(before.end(), t->data.begin(), t->data.end());

  RolloutBuffer buffer;
  (void)collect_rollout(envs, hidden, actor, critic, cfg, rng, buffer);
  compute_gae(buffer, cfg.gamma, cfg.gae_lambda);
  const UpdateStats stats = ppo_update(buffer, actor, critic, adam, cfg, rng);
  CHECK(stats.clip_fraction >= 0.0);  // still computed

  std::vector<double> after;
  for (auto& [n, t] : actor.named_params()) after.insert(after.end(), t->data.begin(), t->data.end());
  for (auto& [n, t] : critic.named_params()) after.insert(after.end(), t->data.begin(), t->data.end());
  CHECK(before == after);
}

TEST_CASE("uniform advantages produce a zero policy gradient") {
  TrainConfig cfg = ppo_train();
  cfg.value_coef = 0.0;
  cfg.entropy_coef = 0.0;
  cfg.ppo_epochs = 2;
  std::vector<EnvSlot> envs(2);
  for (auto& e : envs) e.world = init_world(ppo_world());
  HiddenStates hidden = HiddenStates::zeros(2 * 2, cfg.net.hidden);
  ActorNet actor = ActorNet::init(5 + 4, cfg.net, 31);
  CriticNet critic = CriticNet::init(2, 4, cfg.net, 32);
  ag::Adam adam(ag::AdamConfig{.lr = 0.05});
  SplitMix64 rng(cfg.seed);

  RolloutBuffer buffer;
  (void)collect_rollout(envs, hidden, actor, critic, cfg, rng, buffer);
  compute_gae(buffer, cfg.gamma, cfg.gae_lambda);
  std::fill(buffer.advantages.begin(), buffer.advantages.end(), 2.5);

  std::vector<double> before;
  for (auto& [n, t] : actor.named_params()) before.insert(before.end(), t->data.begin(), t->data.end());

  (void)ppo_update(buffer, actor, critic, adam, cfg, rng);

  std::vector<double> after;
  for (auto& [n, t] : actor.named_params()) after.insert(after.end(), t->data.begin(), t->data.end());
  CHECK(before == after);
}

TEST_CASE("algorithm flag wires the ablation") {
  Trainer tm(ppo_world(), ppo_train(), Algorithm::kMappoTm);
  CHECK(tm.actor().cfg.use_lstm);
  CHECK(tm.critic().cfg.dual_attention);

  Trainer vanilla(ppo_world(), ppo_train(), Algorithm::kMappo);
  CHECK(!vanilla.actor().cfg.use_lstm);
  CHECK(!vanilla.critic().cfg.dual_attention);
  CHECK(vanilla.critic().v_w1.rows == 3 * 2 + 4);

  CHECK_THROWS_AS(Trainer(ppo_world(), ppo_train(), Algorithm::kGreedy), ArgumentError);
}

TEST_CASE("training records advance monotonically and stay finite") {
  Trainer trainer(ppo_world(32), ppo_train(), Algorithm::kMappoTm);
  std::int64_t last = 0;
  for (int i = 0; i < 3; ++i) {
    const TrainLogRecord rec = trainer.iterate();
    CHECK(rec.env_steps > last);
    last = rec.env_steps;
    CHECK(std::isfinite(rec.policy_loss));
    CHECK(std::isfinite(rec.value_loss));
    CHECK(rec.entropy > 0.0);
    CHECK(rec.entropy <= std::log(8.0) + 1e-12);
  }
}

TEST_CASE("checkpoint resume reproduces the uninterrupted run bit-exactly") {
  const WorldConfig wc = ppo_world(32);
  TrainConfig tc = ppo_train();
  tc.minibatch_chunks = 4;

  Trainer full(wc, tc, Algorithm::kMappoTm);
  (void)full.iterate();
  (void)full.iterate();
  const ParamArchive snapshot = full.make_checkpoint();
  std::vector<TrainLogRecord> expected;
  expected.push_back(full.iterate());
  expected.push_back(full.iterate());

  Trainer resumed = Trainer::from_checkpoint(ParamArchive::from_json(snapshot.to_json()));
  CHECK(resumed.env_steps() == 64);
  std::vector<TrainLogRecord> actual;
  actual.push_back(resumed.iterate());
  actual.push_back(resumed.iterate());

  for (std::size_t i = 0; i < expected.size(); ++i) {
    CHECK(actual[i].env_steps == expected[i].env_steps);
    // bit-exact comparisons, wall-clock aside
    CHECK(actual[i].mean_episode_reward == expected[i].mean_episode_reward);
    CHECK(actual[i].policy_loss == expected[i].policy_loss);
    CHECK(actual[i].value_loss == expected[i].value_loss);
    CHECK(actual[i].entropy == expected[i].entropy);
    CHECK(actual[i].clip_fraction == expected[i].clip_fraction);
    CHECK(actual[i].alpha == expected[i].alpha);
  }

  // the nets agree afterwards too
  ActorNet& a1 = full.actor();
  ActorNet& a2 = resumed.actor();
  auto p1 = a1.named_params();
  auto p2 = a2.named_params();
  for (std::size_t k = 0; k < p1.size(); ++k) CHECK(p1[k].second->data == p2[k].second->data);
}

TEST_CASE("two fresh trainers with one config produce identical records") {
  const WorldConfig wc = ppo_world(32);
  const TrainConfig tc = ppo_train();
  Trainer a(wc, tc, Algorithm::kMappoTm);
  Trainer b(wc, tc, Algorithm::kMappoTm);
  for (int i = 0; i < 2; ++i) {
    const TrainLogRecord ra = a.iterate();
    const TrainLogRecord rb = b.iterate();
    CHECK(ra.env_steps == rb.env_steps);
    CHECK(ra.policy_loss == rb.policy_loss);
    CHECK(ra.value_loss == rb.value_loss);
    CHECK(ra.entropy == rb.entropy);
    CHECK(ra.clip_fraction == rb.clip_fraction);
  }
}

TEST_CASE("disabling both components reproduces vanilla MAPPO exactly") {
  const WorldConfig wc = ppo_world(32);
  TrainConfig flags_off = ppo_train();
  flags_off.net.use_lstm = false;
  flags_off.net.dual_attention = false;

  Trainer ablated(wc, flags_off, Algorithm::kMappoTm);
  Trainer vanilla(wc, ppo_train(), Algorithm::kMappo);
  for (int i = 0; i < 2; ++i) {
    const TrainLogRecord ra = ablated.iterate();
    const TrainLogRecord rb = vanilla.iterate();
    CHECK(ra.policy_loss == rb.policy_loss);
    CHECK(ra.value_loss == rb.value_loss);
    CHECK(ra.entropy == rb.entropy);
  }
}

TEST_CASE("evaluate: forced depletion, determinism and trajectories") {
  SUBCASE("a depleted-at-start battery grounds every UAV") {
    WorldConfig cfg = ppo_world(8);
    cfg.battery_capacity_j = 1.0;   // dies on the first step...
    cfg.laser_tx_power_w = 0.0;     // ...and the beams cannot save it
    const EvalSummary s = evaluate(
        cfg, [] { return std::make_unique<GreedyController>(); }, 2, {1, 2});
    for (const auto& ep : s.episodes) CHECK(ep.depletions == cfg.num_uavs);
    CHECK(s.median_depletions == cfg.num_uavs);
  }

  SUBCASE("one episode with a fixed seed repeats exactly") {
    const WorldConfig cfg = ppo_world(32);
    const auto a = evaluate(cfg, [] { return std::make_unique<GreedyController>(); }, 1, {42});
    const auto b = evaluate(cfg, [] { return std::make_unique<GreedyController>(); }, 1, {42});
    CHECK(a.mean_return == b.mean_return);
    CHECK(a.mean_peak_aoi == b.mean_peak_aoi);
    CHECK(a.episodes[0].seed == b.episodes[0].seed);
  }

  SUBCASE("scripted greedy beats random on peak AoI (5-seed median)") {
    WorldConfig cfg;
    cfg.width_m = 500.0;
    cfg.height_m = 500.0;
    cfg.num_sensors = 10;
    cfg.num_uavs = 2;
    cfg.station_xy = {250.0, 250.0};
    cfg.horizon_steps = 200;
    const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    const auto greedy = evaluate(cfg, [] { return std::make_unique<GreedyController>(); }, 5, seeds);
    const auto random = evaluate(cfg, [] { return std::make_unique<RandomController>(7); }, 5, seeds);
    CHECK(greedy.median_peak_aoi < random.median_peak_aoi);
  }
}
