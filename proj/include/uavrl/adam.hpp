#pragma once

#include <cstdint>
#include <vector>

#include "uavrl/tensor.hpp"

namespace uavrl::ag {

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam with optional global-norm gradient clipping applied
// before the moment updates.
class Adam {
 public:
  Adam() = default;
  explicit Adam(AdamConfig cfg) : cfg_(cfg) {}

  AdamConfig& config() { return cfg_; }
  const AdamConfig& config() const { return cfg_; }
  std::int64_t step_count() const { return step_; }

  // clip_norm <= 0 disables clipping; grads are consumed (scaled in place)
  void step(const std::vector<Tensor*>& params, std::vector<Tensor> grads, double clip_norm);

  // moment state, exposed for checkpointing
  const std::vector<Tensor>& first_moments() const { return m_; }
  const std::vector<Tensor>& second_moments() const { return v_; }
  void restore(std::vector<Tensor> m, std::vector<Tensor> v, std::int64_t step_count);

 private:
  AdamConfig cfg_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  std::int64_t step_ = 0;
};

// Scales grads in place so their joint L2 norm is at most max_norm.
// Returns the pre-clip norm.
double clip_global_norm(std::vector<Tensor>& grads, double max_norm);

}  // namespace uavrl::ag
