#include "uavrl/gradcheck.hpp"

#include <cmath>

namespace uavrl::ag {

namespace {

double evaluate(const ScalarGraphFn& f, const std::vector<Tensor>& params) {
  Tape tape(/*grad_enabled=*/false);
  std::vector<Tensor> handles;
  handles.reserve(params.size());
  for (const auto& p : params) handles.push_back(tape.leaf(p));
  Tensor loss = f(tape, handles);
  return loss.item();
}

}  // namespace

double grad_check(const ScalarGraphFn& f, const std::vector<Tensor>& params, double h) {
  // analytic gradients
  Tape tape;
  std::vector<Tensor> handles;
  handles.reserve(params.size());
  for (const auto& p : params) handles.push_back(tape.leaf(p));
  Tensor loss = f(tape, handles);
  if (loss.size() != 1) throw ArgumentError("grad_check: function must be scalar-valued");
  tape.backward(loss);
  std::vector<Tensor> grads;
  grads.reserve(handles.size());
  for (const auto& hd : handles) grads.push_back(tape.grad(hd));

  // central differences per coordinate
  double max_rel = 0.0;
  std::vector<Tensor> perturbed = params;
  for (std::size_t k = 0; k < params.size(); ++k) {
    for (int i = 0; i < params[k].size(); ++i) {
      const double saved = perturbed[k].data[i];
      perturbed[k].data[i] = saved + h;
      const double f_plus = evaluate(f, perturbed);
      perturbed[k].data[i] = saved - h;
      const double f_minus = evaluate(f, perturbed);
      perturbed[k].data[i] = saved;
      const double fd = (f_plus - f_minus) / (2.0 * h);
      const double g = grads[k].data[i];
      const double rel = std::abs(fd - g) / std::max(1e-8, std::abs(fd) + std::abs(g));
      max_rel = std::max(max_rel, rel);
    }
  }
  return max_rel;
}

}  // namespace uavrl::ag
