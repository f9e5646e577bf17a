#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>

#include "CLI11.hpp"

#include "uavrl/baselines.hpp"
#include "uavrl/errors.hpp"
#include "uavrl/metrics.hpp"
#include "uavrl/ppo.hpp"
#include "uavrl/runconfig.hpp"

namespace fs = std::filesystem;
using namespace uavrl;

namespace {

struct CliState {
  std::string config_path;
  std::string algo;
  std::string run_dir;
  std::string preset;
  std::string checkpoint;
  std::string out_path;
  std::string resume;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool no_lstm = false;
  bool no_dual_attention = false;
  bool force = false;
  int episodes = 0;
  int horizon = 6;
  int horizon_override = 0;
  long long steps = 0;
  int gradcheck_seeds = 5;
};

RunConfig assemble_config(const CliState& cli) {
  RunConfig cfg = cli.config_path.empty() ? parse_run_config("") : load_run_config(cli.config_path);
  if (!cli.preset.empty()) {
    const std::uint64_t keep_seed = cfg.world.seed;
    cfg.world = world_preset(cli.preset);
    cfg.world.seed = keep_seed;
  }
  if (!cli.algo.empty()) cfg.algorithm = algorithm_from_name(cli.algo);
  if (cli.seed_set) {
    cfg.world.seed = cli.seed;
    cfg.train.seed = cli.seed;
  }
  if (cli.no_lstm) cfg.train.net.use_lstm = false;
  if (cli.no_dual_attention) cfg.train.net.dual_attention = false;
  if (cfg.algorithm == Algorithm::kMappo) {
    cfg.train.net.use_lstm = false;
    cfg.train.net.dual_attention = false;
  }
  if (!cli.run_dir.empty()) cfg.paths.run_dir = cli.run_dir;
  if (!cli.checkpoint.empty()) cfg.paths.checkpoint_in = cli.checkpoint;
  if (cli.episodes > 0) cfg.eval.n_episodes = cli.episodes;
  if (cli.steps > 0) cfg.train.total_env_steps = cli.steps;
  if (cli.horizon_override > 0) cfg.world.horizon_steps = cli.horizon_override;
  cfg.validate();
  return cfg;
}

fs::path resolve_run_dir(const RunConfig& cfg, const std::string& subcommand) {
  if (!cfg.paths.run_dir.empty()) return cfg.paths.run_dir;
  const char* root_env = std::getenv("UAVRL_RUN_ROOT");
  const fs::path root = root_env ? fs::path(root_env) : fs::path("runs");
  return root / (subcommand + "-" + config_hash(cfg).substr(0, 8));
}

fs::path prepare_run_dir(const RunConfig& cfg, const std::string& subcommand) {
  const fs::path dir = resolve_run_dir(cfg, subcommand);
  fs::create_directories(dir);
  nlohmann::ordered_json echo = run_config_to_json(cfg);
  echo["config_hash"] = config_hash(cfg);
  std::ofstream out(dir / "config.json", std::ios::binary);
  if (!out) throw IoError("cannot write config echo: " + (dir / "config.json").string());
  out << echo.dump(2) << "\n";
  return dir;
}

std::unique_ptr<Controller> make_baseline_controller(Algorithm algo, std::uint64_t seed) {
  if (algo == Algorithm::kGreedy) return std::make_unique<GreedyController>();
  if (algo == Algorithm::kRandom) return std::make_unique<RandomController>(seed);
  throw ArgumentError("expected a baseline algorithm (greedy|random)");
}

nlohmann::ordered_json record_to_json(const TrainLogRecord& r) {
  nlohmann::ordered_json j;
  j["type"] = "record";
  j["env_steps"] = r.env_steps;
  j["mean_episode_reward"] = r.mean_episode_reward;
  j["policy_loss"] = r.policy_loss;
  j["value_loss"] = r.value_loss;
  j["entropy"] = r.entropy;
  j["clip_fraction"] = r.clip_fraction;
  j["alpha"] = r.alpha;
  j["wall_clock_s"] = r.wall_clock_s;
  return j;
}

nlohmann::ordered_json eval_to_json(std::int64_t env_steps, const EvalSummary& s) {
  nlohmann::ordered_json j;
  j["type"] = "eval";
  j["env_steps"] = env_steps;
  j["mean_return"] = s.mean_return;
  j["std_return"] = s.std_return;
  j["mean_peak_aoi_s"] = s.mean_peak_aoi;
  j["median_peak_aoi_s"] = s.median_peak_aoi;
  j["mean_aoi_s"] = s.mean_aoi;
  j["mean_depletions"] = s.mean_depletions;
  j["median_depletions"] = s.median_depletions;
  return j;
}

int cmd_train(const CliState& cli) {
  RunConfig cfg = assemble_config(cli);
  if (cfg.algorithm != Algorithm::kMappoTm && cfg.algorithm != Algorithm::kMappo) {
    throw ConfigError("train requires --algo mappo_tm or mappo");
  }
  const fs::path dir = prepare_run_dir(cfg, "train");
  const std::string hash = config_hash(cfg);

  Trainer trainer = cli.resume.empty()
                        ? Trainer(cfg.world, cfg.train, cfg.algorithm)
                        : Trainer::from_checkpoint(ParamArchive::load(cli.resume));

  std::ofstream train_log(dir / "train_log.jsonl", std::ios::binary);
  std::ofstream eval_log(dir / "eval_log.jsonl", std::ios::binary);
  if (!train_log || !eval_log) throw IoError("cannot open log files under " + dir.string());
  train_log << nlohmann::ordered_json({{"type", "meta"},
                                       {"config_hash", hash},
                                       {"algorithm", algorithm_name(trainer.algorithm())}})
                   .dump()
            << "\n";
  eval_log << nlohmann::ordered_json({{"type", "meta"}, {"config_hash", hash}}).dump() << "\n";

  Trainer::Hooks hooks;
  hooks.eval_episodes = cfg.eval.n_episodes;
  hooks.eval_seeds = cfg.eval_seeds();
  hooks.on_record = [&](const TrainLogRecord& r) {
    train_log << record_to_json(r).dump() << "\n";
    train_log.flush();
    std::cout << "steps " << r.env_steps << "  reward " << r.mean_episode_reward << "  pi_loss "
              << r.policy_loss << "  v_loss " << r.value_loss << "  entropy " << r.entropy
              << "\n";
  };
  hooks.on_eval = [&](std::int64_t steps, const EvalSummary& s) {
    eval_log << eval_to_json(steps, s).dump() << "\n";
    eval_log.flush();
    std::cout << "eval @" << steps << "  return " << s.mean_return << "  peak_aoi "
              << s.mean_peak_aoi << "  depletions " << s.mean_depletions << "\n";
  };
  hooks.on_checkpoint = [&](std::int64_t steps, Trainer& t) {
    ParamArchive a = t.make_checkpoint();
    a.manifest["config_hash"] = hash;
    a.save((dir / ("ckpt_" + std::to_string(steps) + ".json")).string());
    a.save((dir / "ckpt_final.json").string());
  };

  trainer.run(hooks);
  std::cout << "training complete: " << trainer.env_steps() << " env steps, artifacts in " << dir
            << "\n";
  return 0;
}

int cmd_eval(const CliState& cli) {
  RunConfig cfg = assemble_config(cli);
  const fs::path dir = prepare_run_dir(cfg, "eval");
  const std::string hash = config_hash(cfg);

  std::function<std::unique_ptr<Controller>()> make;
  if (!cfg.paths.checkpoint_in.empty()) {
    const ParamArchive archive = ParamArchive::load(cfg.paths.checkpoint_in);
    const std::string ckpt_world = archive.manifest.value("world_hash", std::string("missing"));
    if (ckpt_world != world_hash(cfg.world) && !cli.force) {
      throw ConfigError("checkpoint world hash " + ckpt_world +
                        " does not match the configured world " + world_hash(cfg.world) +
                        " (pass --force to evaluate anyway)");
    }
    Trainer t = Trainer::from_checkpoint(archive);
    ActorNet actor = t.actor();
    make = [actor] { return std::make_unique<ActorController>(actor); };
  } else if (cfg.algorithm == Algorithm::kGreedy || cfg.algorithm == Algorithm::kRandom) {
    const Algorithm algo = cfg.algorithm;
    const std::uint64_t seed = cfg.world.seed;
    make = [algo, seed] { return make_baseline_controller(algo, seed); };
  } else {
    throw ConfigError("eval needs either --checkpoint or --algo greedy|random");
  }

  const auto summary = evaluate(cfg.world, make, cfg.eval.n_episodes, cfg.eval_seeds(),
                                [&](int i, const EpisodeLog& log) {
                                  export_trajectory_file(
                                      log, (dir / ("ep_" + std::to_string(i) + ".csv")).string(),
                                      hash);
                                });

  nlohmann::ordered_json j = eval_to_json(0, summary);
  j["type"] = "eval_summary";
  j["config_hash"] = hash;
  nlohmann::ordered_json eps = nlohmann::ordered_json::array();
  for (const auto& ep : summary.episodes) {
    eps.push_back({{"seed", ep.seed},
                   {"episode_return", ep.episode_return},
                   {"peak_aoi_s", ep.peak_aoi_s},
                   {"mean_aoi_s", ep.mean_aoi_s},
                   {"depletions", ep.depletions}});
  }
  j["episodes"] = std::move(eps);
  std::ofstream out(dir / "eval_summary.json", std::ios::binary);
  out << j.dump(2) << "\n";
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_sweep(const CliState& cli) {
  RunConfig cfg = assemble_config(cli);
  const fs::path dir = prepare_run_dir(cfg, "sweep");
  const std::string hash = config_hash(cfg);

  ControllerFactory factory;
  if (!cfg.paths.checkpoint_in.empty()) {
    Trainer t = Trainer::from_checkpoint(ParamArchive::load(cfg.paths.checkpoint_in));
    ActorNet actor = t.actor();
    factory = [actor](const WorldConfig&) { return std::make_unique<ActorController>(actor); };
  } else {
    const Algorithm algo =
        (cfg.algorithm == Algorithm::kRandom) ? Algorithm::kRandom : Algorithm::kGreedy;
    factory = [algo](const WorldConfig& wc) { return make_baseline_controller(algo, wc.seed); };
  }

  const SweepResult result = efficiency_sweep(factory, cfg.sweep.etas, cfg.sweep.seeds, cfg.world);
  const std::string doc = sweep_to_json(result, hash);
  std::ofstream out(dir / "sweep.json", std::ios::binary);
  out << doc << "\n";
  std::cout << doc << "\n";
  const double rho = spearman_rho(result.etas, result.median_peak_aoi);
  std::cout << "spearman_rho(eta, median_peak_aoi) = " << rho << "\n";
  return 0;
}

int cmd_simulate(const CliState& cli) {
  RunConfig cfg = assemble_config(cli);
  if (cfg.algorithm != Algorithm::kGreedy && cfg.algorithm != Algorithm::kRandom) {
    throw ConfigError("simulate supports --algo greedy|random");
  }
  const fs::path dir = prepare_run_dir(cfg, "simulate");
  const std::string hash = config_hash(cfg);
  auto controller = make_baseline_controller(cfg.algorithm, cfg.world.seed);
  const EpisodeLog log = run_episode(init_world(cfg.world), *controller);
  const fs::path out_path = cli.out_path.empty() ? dir / "trajectory.csv" : fs::path(cli.out_path);
  export_trajectory_file(log, out_path.string(), hash);
  std::cout << "steps " << log.steps.size() << "  return " << episode_return(log) << "  peak_aoi "
            << peak_aoi(log) << " s  depletions " << depletion_count(log) << "\n"
            << "trajectory: " << out_path << "\n";
  return 0;
}

int cmd_gradcheck(const CliState& cli) {
  double actor_max = 0.0, critic_max = 0.0;
  for (int s = 1; s <= cli.gradcheck_seeds; ++s) {
    actor_max = std::max(actor_max, actor_grad_check_error(static_cast<std::uint64_t>(s)));
    critic_max = std::max(critic_max, critic_grad_check_error(static_cast<std::uint64_t>(s)));
  }
  std::cout << "actor (mlp+lstm+head)                max rel err " << actor_max << "\n";
  std::cout << "critic (embed+dual attention+blend)  max rel err " << critic_max << "\n";
  const bool ok = actor_max <= 1e-4 && critic_max <= 1e-4;
  std::cout << (ok ? "gradcheck passed" : "gradcheck FAILED") << "\n";
  return ok ? 0 : 4;
}

int cmd_oracle(const CliState& cli) {
  WorldConfig cfg;
  if (!cli.preset.empty()) {
    cfg = world_preset(cli.preset);
  } else if (!cli.config_path.empty()) {
    cfg = load_run_config(cli.config_path).world;
  } else {
    cfg = world_preset("tiny");
  }
  if (cli.seed_set) cfg.seed = cli.seed;
  const OracleResult result = brute_force_oracle(cfg, cli.horizon);
  std::cout << "sequences evaluated: " << result.sequences_evaluated << "\n";
  std::cout << "best return: " << result.best_return << "\n";
  std::cout << "best sequence:";
  for (int a : result.best_sequence) std::cout << ' ' << direction_name(a);
  std::cout << "\n";
  const double replay = replay_return(cfg, result.best_sequence);
  std::cout << "replay return: " << replay << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"laser-charged UAV data-collection simulator and MAPPO trainer"};
  app.require_subcommand(1);
  CliState cli;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", cli.config_path, "JSON config file");
    cmd->add_option("--seed", cli.seed, "override the config seed")->each([&](const std::string&) {
      cli.seed_set = true;
    });
    cmd->add_option("--run-dir", cli.run_dir, "output directory");
    cmd->add_option("--preset", cli.preset, "world preset: default|tiny|scaled");
  };

  auto* train_cmd = app.add_subcommand("train", "train MAPPO-TM or the vanilla MAPPO ablation");
  add_common(train_cmd);
  train_cmd->add_option("--algo", cli.algo, "mappo_tm|mappo");
  train_cmd->add_option("--steps", cli.steps, "total env steps override");
  train_cmd->add_option("--resume", cli.resume, "resume from a trainer checkpoint");
  train_cmd->add_flag("--no-lstm", cli.no_lstm, "drop the actor LSTM");
  train_cmd->add_flag("--no-dual-attention", cli.no_dual_attention, "drop the dual-attention critic");

  auto* eval_cmd = app.add_subcommand("eval", "greedy evaluation episodes with trajectory export");
  add_common(eval_cmd);
  eval_cmd->add_option("--algo", cli.algo, "greedy|random (without --checkpoint)");
  eval_cmd->add_option("--checkpoint", cli.checkpoint, "trained policy checkpoint");
  eval_cmd->add_option("--episodes", cli.episodes, "number of evaluation episodes");
  eval_cmd->add_flag("--force", cli.force, "ignore config-hash mismatch");

  auto* sweep_cmd = app.add_subcommand("sweep", "peak AoI vs laser-to-electricity efficiency");
  add_common(sweep_cmd);
  sweep_cmd->add_option("--algo", cli.algo, "greedy|random");
  sweep_cmd->add_option("--checkpoint", cli.checkpoint, "sweep a trained policy instead");

  auto* sim_cmd = app.add_subcommand("simulate", "single scripted/random rollout to CSV");
  add_common(sim_cmd);
  sim_cmd->add_option("--algo", cli.algo, "greedy|random")->required();
  sim_cmd->add_option("--out", cli.out_path, "trajectory CSV path");
  sim_cmd->add_option("--steps", cli.horizon_override, "episode length override");

  auto* grad_cmd = app.add_subcommand("gradcheck", "verify gradients against finite differences");
  grad_cmd->add_option("--seeds", cli.gradcheck_seeds, "number of randomized seeds");

  auto* oracle_cmd = app.add_subcommand("oracle", "exhaustive best-sequence search on tiny worlds");
  add_common(oracle_cmd);
  oracle_cmd->add_option("--horizon", cli.horizon, "search horizon (8^h sequences)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(cli);
    if (eval_cmd->parsed()) return cmd_eval(cli);
    if (sweep_cmd->parsed()) return cmd_sweep(cli);
    if (sim_cmd->parsed()) return cmd_simulate(cli);
    if (grad_cmd->parsed()) return cmd_gradcheck(cli);
    if (oracle_cmd->parsed()) return cmd_oracle(cli);
  } catch (const ConfigError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 4;
  }
  return 2;
}
