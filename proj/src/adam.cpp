#include "uavrl/adam.hpp"

#include <cmath>

namespace uavrl::ag {

double clip_global_norm(std::vector<Tensor>& grads, double max_norm) {
  double sq = 0.0;
  for (const auto& g : grads)
    for (double v : g.data) sq += v * v;
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (auto& g : grads)
      for (double& v : g.data) v *= s;
  }
  return norm;
}

void Adam::restore(std::vector<Tensor> m, std::vector<Tensor> v, std::int64_t step_count) {
  m_ = std::move(m);
  v_ = std::move(v);
  step_ = step_count;
}

void Adam::step(const std::vector<Tensor*>& params, std::vector<Tensor> grads, double clip_norm) {
  if (params.size() != grads.size()) throw ShapeError("adam: params/grads count mismatch");
  if (m_.empty()) {
    for (const auto* p : params) {
      m_.emplace_back(p->rows, p->cols);
      v_.emplace_back(p->rows, p->cols);
    }
  }
  if (m_.size() != params.size()) throw ShapeError("adam: parameter set changed size");
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k]->rows != grads[k].rows || params[k]->cols != grads[k].cols) {
      throw ShapeError("adam: grad shape " + grads[k].shape_str() + " does not match param " +
                       params[k]->shape_str());
    }
  }

  clip_global_norm(grads, clip_norm);
  step_ += 1;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& m = m_[k].data;
    auto& v = v_[k].data;
    auto& p = params[k]->data;
    const auto& g = grads[k].data;
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      p[i] -= cfg_.lr * m_hat / (std::sqrt(v_hat) + cfg_.eps);
    }
  }
}

}  // namespace uavrl::ag
