#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "uavrl/rng.hpp"
#include "uavrl/tape.hpp"

namespace uavrl {

// Architecture knobs. use_lstm / dual_attention off together reproduce the
// plain MAPPO baseline.
struct NetConfig {
  int hidden = 64;
  int embed = 32;
  int value_hidden = 32;
  bool use_lstm = true;
  bool dual_attention = true;
};

// Shared-parameter actor: obs -> dense tanh -> LSTM -> 8-way softmax head.
// One parameter set serves every agent.
struct ActorNet {
  int d_obs = 0;
  NetConfig cfg;
  ag::Tensor w_in, b_in;
  ag::LstmParams lstm;
  ag::Tensor w_head, b_head;

  static ActorNet init(int d_obs, const NetConfig& cfg, std::uint64_t seed);
  std::vector<std::pair<std::string, ag::Tensor*>> named_params();
  // leaf handles on the given tape, in named_params order
  ActorNet watch(ag::Tape& tape) const;
};

struct ActorOut {
  ag::Tensor probs;  // (B,8)
  ag::Tensor logp;   // (B,8)
  ag::Tensor h;      // (B,hidden)
  ag::Tensor c;      // (B,hidden)
};

// Batched policy step. obs: (B,d_obs); h,c: (B,hidden) carried state
// (ignored and passed through when the LSTM is disabled).
ActorOut actor_forward(ag::Tape& tape, const ActorNet& params, const ag::Tensor& obs,
                       const ag::Tensor& h, const ag::Tensor& c);

// Centralized critic. Dual-attention variant embeds per-UAV triples and
// per-sensor AoI scalars into role-tagged tokens, runs a local head (one
// query per UAV token) and a global head (mean-token query), and blends the
// two value estimates with a learned sigmoid weight. The vanilla variant is
// a plain MLP on the global state shared by all agents.
struct CriticNet {
  int num_uavs = 0;
  int num_sensors = 0;
  NetConfig cfg;
  // dual-attention parameters
  ag::Tensor w_uav_embed, b_uav_embed;
  ag::Tensor w_sen_embed, b_sen_embed;
  ag::Tensor tag_uav, tag_sen;
  ag::Tensor wq_loc, wk_loc, wv_loc;
  ag::Tensor wq_glob, wk_glob, wv_glob;
  ag::Tensor w1_loc, b1_loc, w2_loc, b2_loc;
  ag::Tensor w1_glob, b1_glob, w2_glob, b2_glob;
  ag::Tensor blend_w;  // (1,1); alpha = sigmoid(blend_w)
  // vanilla parameters
  ag::Tensor v_w1, v_b1, v_w2, v_b2, v_w3, v_b3;

  static CriticNet init(int num_uavs, int num_sensors, const NetConfig& cfg, std::uint64_t seed);
  std::vector<std::pair<std::string, ag::Tensor*>> named_params();
  CriticNet watch(ag::Tape& tape) const;
};

struct CriticOut {
  ag::Tensor v_loc;    // (U,1)
  ag::Tensor v_glob;   // (1,1)
  ag::Tensor alpha;    // (1,1); empty for the vanilla critic
  ag::Tensor v_blend;  // (U,1) = alpha*v_loc + (1-alpha)*v_glob
};

// state: (1, 3*num_uavs + num_sensors)
CriticOut critic_forward(ag::Tape& tape, const CriticNet& params, const ag::Tensor& state);

// Categorical draw from one probability row. Throws NumericError unless the
// row sums to 1 within 1e-9 and is non-negative.
std::pair<int, double> sample_action(const double* probs, int n, SplitMix64& rng);

// argmax, ties to the lowest index
int greedy_action(const double* probs, int n);

// Finite-difference verification of the full network blocks on randomized
// small instances. Returns the max relative error (see grad_check).
double actor_grad_check_error(std::uint64_t seed);
double critic_grad_check_error(std::uint64_t seed);

}  // namespace uavrl
