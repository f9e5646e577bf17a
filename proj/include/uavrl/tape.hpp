#pragma once

#include <functional>
#include <vector>

#include "uavrl/tensor.hpp"

namespace uavrl::ag {

// Define-by-run reverse-mode tape. Ops record themselves while grad mode is
// on; with grad mode off the same entry points run as pure forward math.
// Tensors whose node is -1 act as constants and receive no gradient.
//
// A tape is single-threaded. clear() invalidates every node id handed out.
class Tape {
 public:
  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}

  bool grad_enabled() const { return grad_enabled_; }

  // registers a differentiable leaf; returns a handle carrying its node id
  Tensor leaf(const Tensor& t);

  Tensor add(const Tensor& a, const Tensor& b);  // same shape, or b a (1,c) bias row
  Tensor sub(const Tensor& a, const Tensor& b);
  Tensor mul(const Tensor& a, const Tensor& b);  // same shape, (1,1) scalar, or (r,1) row-scale
  Tensor matmul(const Tensor& a, const Tensor& b);
  Tensor transpose(const Tensor& a);
  Tensor reshape(const Tensor& a, int rows, int cols);

  Tensor sigmoid(const Tensor& a);
  Tensor tanh(const Tensor& a);
  Tensor relu(const Tensor& a);
  Tensor exp(const Tensor& a);
  Tensor log(const Tensor& a);
  Tensor scale(const Tensor& a, double k);
  Tensor add_scalar(const Tensor& a, double k);
  Tensor clamp(const Tensor& a, double lo, double hi);
  Tensor minimum(const Tensor& a, const Tensor& b);  // ties route gradient to a

  Tensor softmax_rows(const Tensor& a);
  Tensor log_softmax_rows(const Tensor& a);

  Tensor concat_rows(const std::vector<Tensor>& parts);
  Tensor slice(const Tensor& a, int r0, int r1, int c0, int c1);
  Tensor sum_all(const Tensor& a);    // (1,1)
  Tensor mean_all(const Tensor& a);   // (1,1)
  Tensor row_sum(const Tensor& a);    // (r,1), sum across each row
  Tensor col_mean(const Tensor& a);   // (1,c), mean down each column

  // reverse-topological accumulation from a scalar loss on this tape
  void backward(const Tensor& loss);

  // gradient of the last backward() w.r.t. a tensor registered on this tape
  Tensor grad(const Tensor& t) const;

  void clear();
  std::size_t num_nodes() const { return shapes_.size(); }

 private:
  struct NodeShape {
    int rows;
    int cols;
  };
  using BackwardFn = std::function<void(Tape&, const std::vector<double>&)>;

  int push_node(int rows, int cols, BackwardFn backward_fn);
  Tensor finish(Tensor value, const char* op, BackwardFn backward_fn);
  void check_finite(const Tensor& t, const char* op) const;
  std::vector<double>& grad_slot(int node);

  bool grad_enabled_;
  std::vector<NodeShape> shapes_;
  std::vector<BackwardFn> backward_fns_;
  std::vector<std::vector<double>> grads_;
};

// Per-gate LSTM parameters: z = sigma/tanh(W x + U h + b).
struct LstmParams {
  Tensor wi, ui, bi;
  Tensor wf, uf, bf;
  Tensor wg, ug, bg;
  Tensor wo, uo, bo;
};

// Single LSTM cell step over a batch of rows. x: (B,d_in), h,c: (B,d_h).
std::pair<Tensor, Tensor> lstm_cell(Tape& tape, const Tensor& x, const Tensor& h, const Tensor& c,
                                    const LstmParams& p);

// softmax(Q K^T / sqrt(d)) V. Q: (n_q,d), K: (n_k,d), V: (n_k,d_v).
Tensor scaled_dot_attention(Tape& tape, const Tensor& q, const Tensor& k, const Tensor& v);

}  // namespace uavrl::ag
