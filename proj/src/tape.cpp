#include "uavrl/tape.hpp"

#include <algorithm>
#include <cmath>

namespace uavrl::ag {

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.rows != b.rows || a.cols != b.cols) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
  }
}

}  // namespace

void Tape::check_finite(const Tensor& t, const char* op) const {
  for (double v : t.data) {
    if (!std::isfinite(v)) {
      throw NumericError(std::string(op) + " produced a non-finite value");
    }
  }
}

int Tape::push_node(int rows, int cols, BackwardFn backward_fn) {
  shapes_.push_back({rows, cols});
  backward_fns_.push_back(std::move(backward_fn));
  return static_cast<int>(shapes_.size()) - 1;
}

Tensor Tape::finish(Tensor value, const char* op, BackwardFn backward_fn) {
  check_finite(value, op);
  if (grad_enabled_) {
    value.node = push_node(value.rows, value.cols, std::move(backward_fn));
  } else {
    value.node = -1;
  }
  return value;
}

std::vector<double>& Tape::grad_slot(int node) {
  auto& g = grads_[node];
  if (g.empty()) {
    g.assign(static_cast<std::size_t>(shapes_[node].rows) * shapes_[node].cols, 0.0);
  }
  return g;
}

Tensor Tape::leaf(const Tensor& t) {
  Tensor out = t;
  check_finite(out, "leaf");
  out.node = grad_enabled_ ? push_node(out.rows, out.cols, nullptr) : -1;
  return out;
}

Tensor Tape::add(const Tensor& a, const Tensor& b) {
  const bool bias_row = (b.rows == 1 && a.rows > 1 && b.cols == a.cols);
  if (!bias_row) require_same_shape(a, b, "add");
  Tensor out(a.rows, a.cols);
  if (bias_row) {
    for (int r = 0; r < a.rows; ++r)
      for (int c = 0; c < a.cols; ++c) out.at(r, c) = a.at(r, c) + b.data[c];
  } else {
    for (int i = 0; i < a.size(); ++i) out.data[i] = a.data[i] + b.data[i];
  }
  const int an = a.node, bn = b.node, rows = a.rows, cols = a.cols;
  return finish(std::move(out), "add", [an, bn, bias_row, rows, cols](Tape& t, const std::vector<double>& g) {
    if (an >= 0) {
      auto& ga = t.grad_slot(an);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (bn >= 0) {
      auto& gb = t.grad_slot(bn);
      if (bias_row) {
        for (int r = 0; r < rows; ++r)
          for (int c = 0; c < cols; ++c) gb[c] += g[static_cast<std::size_t>(r) * cols + c];
      } else {
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
      }
    }
  });
}

Tensor Tape::sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  Tensor out(a.rows, a.cols);
  for (int i = 0; i < a.size(); ++i) out.data[i] = a.data[i] - b.data[i];
  const int an = a.node, bn = b.node;
  return finish(std::move(out), "sub", [an, bn](Tape& t, const std::vector<double>& g) {
    if (an >= 0) {
      auto& ga = t.grad_slot(an);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (bn >= 0) {
      auto& gb = t.grad_slot(bn);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

Tensor Tape::mul(const Tensor& a, const Tensor& b) {
  // broadcasts commute; normalize so the scalar / column vector is on the right
  if (a.rows == 1 && a.cols == 1 && b.size() > 1) return mul(b, a);
  if (a.cols == 1 && a.rows == b.rows && b.cols > 1) return mul(b, a);

  const bool scalar_b = (b.rows == 1 && b.cols == 1 && a.size() > 1);
  const bool colvec_b = (!scalar_b && b.cols == 1 && b.rows == a.rows && a.cols > 1);
  if (!scalar_b && !colvec_b) require_same_shape(a, b, "mul");

  Tensor out(a.rows, a.cols);
  if (scalar_b) {
    const double s = b.data[0];
    for (int i = 0; i < a.size(); ++i) out.data[i] = a.data[i] * s;
  } else if (colvec_b) {
    for (int r = 0; r < a.rows; ++r)
      for (int c = 0; c < a.cols; ++c) out.at(r, c) = a.at(r, c) * b.data[r];
  } else {
    for (int i = 0; i < a.size(); ++i) out.data[i] = a.data[i] * b.data[i];
  }
  const int an = a.node, bn = b.node, rows = a.rows, cols = a.cols;
  std::vector<double> adata = (an >= 0 || bn >= 0) ? a.data : std::vector<double>{};
  std::vector<double> bdata = (an >= 0 || bn >= 0) ? b.data : std::vector<double>{};
  return finish(std::move(out), "mul",
                [an, bn, scalar_b, colvec_b, rows, cols, adata = std::move(adata),
                 bdata = std::move(bdata)](Tape& t, const std::vector<double>& g) {
    if (an >= 0) {
      auto& ga = t.grad_slot(an);
      if (scalar_b) {
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bdata[0];
      } else if (colvec_b) {
        for (int r = 0; r < rows; ++r)
          for (int c = 0; c < cols; ++c)
            ga[static_cast<std::size_t>(r) * cols + c] += g[static_cast<std::size_t>(r) * cols + c] * bdata[r];
      } else {
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bdata[i];
      }
    }
    if (bn >= 0) {
      auto& gb = t.grad_slot(bn);
      if (scalar_b) {
        double s = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) s += g[i] * adata[i];
        gb[0] += s;
      } else if (colvec_b) {
        for (int r = 0; r < rows; ++r) {
          double s = 0.0;
          for (int c = 0; c < cols; ++c)
            s += g[static_cast<std::size_t>(r) * cols + c] * adata[static_cast<std::size_t>(r) * cols + c];
          gb[r] += s;
        }
      } else {
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * adata[i];
      }
    }
  });
}

Tensor Tape::matmul(const Tensor& a, const Tensor& b) {
  if (a.cols != b.rows) {
    throw ShapeError("matmul: inner dims differ " + a.shape_str() + " vs " + b.shape_str());
  }
  const int m = a.rows, k = a.cols, n = b.cols;
  Tensor out(m, n);
  for (int i = 0; i < m; ++i) {
    const double* arow = a.data.data() + static_cast<std::size_t>(i) * k;
    double* orow = out.data.data() + static_cast<std::size_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      const double* brow = b.data.data() + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
  const int an = a.node, bn = b.node;
  std::vector<double> adata = (bn >= 0) ? a.data : std::vector<double>{};
  std::vector<double> bdata = (an >= 0) ? b.data : std::vector<double>{};
  return finish(std::move(out), "matmul",
                [an, bn, m, k, n, adata = std::move(adata), bdata = std::move(bdata)](
                    Tape& t, const std::vector<double>& g) {
    if (an >= 0) {
      // dA = G B^T
      auto& ga = t.grad_slot(an);
      for (int i = 0; i < m; ++i) {
        const double* grow = g.data() + static_cast<std::size_t>(i) * n;
        double* garow = ga.data() + static_cast<std::size_t>(i) * k;
        for (int p = 0; p < k; ++p) {
          const double* brow = bdata.data() + static_cast<std::size_t>(p) * n;
          double s = 0.0;
          for (int j = 0; j < n; ++j) s += grow[j] * brow[j];
          garow[p] += s;
        }
      }
    }
    if (bn >= 0) {
      // dB = A^T G
      auto& gb = t.grad_slot(bn);
      for (int i = 0; i < m; ++i) {
        const double* arow = adata.data() + static_cast<std::size_t>(i) * k;
        const double* grow = g.data() + static_cast<std::size_t>(i) * n;
        for (int p = 0; p < k; ++p) {
          const double av = arow[p];
          if (av == 0.0) continue;
          double* gbrow = gb.data() + static_cast<std::size_t>(p) * n;
          for (int j = 0; j < n; ++j) gbrow[j] += av * grow[j];
        }
      }
    }
  });
}

Tensor Tape::transpose(const Tensor& a) {
  Tensor out(a.cols, a.rows);
  for (int r = 0; r < a.rows; ++r)
    for (int c = 0; c < a.cols; ++c) out.at(c, r) = a.at(r, c);
  const int an = a.node, rows = a.rows, cols = a.cols;
  return finish(std::move(out), "transpose", [an, rows, cols](Tape& t, const std::vector<double>& g) {
    if (an < 0) return;
    auto& ga = t.grad_slot(an);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c)
        ga[static_cast<std::size_t>(r) * cols + c] += g[static_cast<std::size_t>(c) * rows + r];
  });
}

Tensor Tape::reshape(const Tensor& a, int rows, int cols) {
  if (rows * cols != a.size()) {
    throw ShapeError("reshape: element count mismatch " + a.shape_str() + " to (" +
                     std::to_string(rows) + "," + std::to_string(cols) + ")");
  }
  Tensor out(rows, cols, a.data);
  const int an = a.node;
  return finish(std::move(out), "reshape", [an](Tape& t, const std::vector<double>& g) {
    if (an < 0) return;
    auto& ga = t.grad_slot(an);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

Tensor Tape::sigmoid(const Tensor& a) {
  Tensor out(a.rows, a.cols);
  for (int i = 0; i < a.size(); ++i) out.data[i] = 1.0 / (1.0 + std::exp(-a.data[i]));
  const int an = a.node;
  std::vector<double> y = (an >= 0) ? out.data : std::vector<double>{};
  return finish(std::move(out), "sigmoid", [an, y = std::move(y)](Tape& t, const std::vector<double>& g) {
    if (an < 0) return;
    auto& ga = t.grad_slot(an);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
  });
}

Tensor Tape::tanh(const Tensor& a) {
  Tensor out(a.rows, a.cols);
  for (int i = 0; i < a.size(); ++i) out.data[i] = std::tanh(a.data[i]);
  const int an = a.node;
  std::vector<double> y = (an >= 0) ? out.data : std::vector<double>{};
  return finish(std::move(out), "tanh", [an, y = std::move(y)](Tape& t, const std::vector<double>& g) {
    if (an < 0) return;
    auto& ga = t.grad_slot(an);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
  });
}

Tensor Tape::relu(const Tensor& a) {
  Tensor out(a.rows, a.cols);
  for (int i = 0; i < a.size(); ++i) out.data[i] = a.data[i] > 0.0 ? a.data[i] : 0.0;
  const int an = a.node;
  std::vector<double> x = (an >= 0) ? a.data : std::vector<double>{};
  return finish(std::move(out), "relu", [an, x = std::move(x)](Tape& t, const std::vector<double>& g) {
    if (an < 0) return;
    auto& ga = t.grad_slot(an);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (x[i] > 0.0) ga[i] += g[i];
  });
}

Tensor Tape::exp(const Tensor& a) {
  Tensor out(a.rows, a.cols);
  for (int i = 0; i < a.size(); ++i) out.data[i] = std::exp(a.data[i]);
  const int an = a.node;
  std::vector<double> y = (an >= 0) ? out.data : std::vector<double>{};
  return finish(std::move(out), "exp", [an, y = std::move(y)](Tape& t, const std::vector<double>& g) {
    if (an < 0) return;
    auto& ga = t.grad_slot(an);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i];
  });
}

Tensor Tape::log(const Tensor& a) {
  Tensor out(a.rows, a.cols);
  for (int i = 0; i < a.size(); ++i) out.data[i] = std::log(a.data[i]);
  const int an = a.node;
  std::vector<double> x = (an >= 0) ? a.data : std::vector<double>{};
  return finish(std::move(out), "log", [an, x = std::move(x)](Tape& t, const std::vector<double>& g) {
    if (an < 0) return;
    auto& ga = t.grad_slot(an);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / x[i];
  });
}

Tensor Tape::scale(const Tensor& a, double k) {
  Tensor out(a.rows, a.cols);
  for (int i = 0; i < a.size(); ++i) out.data[i] = a.data[i] * k;
  const int an = a.node;
  return finish(std::move(out), "scale", [an, k](Tape& t, const std::vector<double>& g) {
    if (an < 0) return;
    auto& ga = t.grad_slot(an);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * k;
  });
}

Tensor Tape::add_scalar(const Tensor& a, double k) {
  Tensor out(a.rows, a.cols);
  for (int i = 0; i < a.size(); ++i) out.data[i] = a.data[i] + k;
  const int an = a.node;
  return finish(std::move(out), "add_scalar", [an](Tape& t, const std::vector<double>& g) {
    if (an < 0) return;
    auto& ga = t.grad_slot(an);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

Tensor Tape::clamp(const Tensor& a, double lo, double hi) {
  Tensor out(a.rows, a.cols);
  for (int i = 0; i < a.size(); ++i) out.data[i] = std::min(std::max(a.data[i], lo), hi);
  const int an = a.node;
  std::vector<double> x = (an >= 0) ? a.data : std::vector<double>{};
  return finish(std::move(out), "clamp",
                [an, lo, hi, x = std::move(x)](Tape& t, const std::vector<double>& g) {
    if (an < 0) return;
    auto& ga = t.grad_slot(an);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (x[i] >= lo && x[i] <= hi) ga[i] += g[i];
  });
}

Tensor Tape::minimum(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "minimum");
  Tensor out(a.rows, a.cols);
  std::vector<std::uint8_t> take_a(a.size());
  for (int i = 0; i < a.size(); ++i) {
    take_a[i] = a.data[i] <= b.data[i];
    out.data[i] = take_a[i] ? a.data[i] : b.data[i];
  }
  const int an = a.node, bn = b.node;
  return finish(std::move(out), "minimum",
                [an, bn, take_a = std::move(take_a)](Tape& t, const std::vector<double>& g) {
    if (an >= 0) {
      auto& ga = t.grad_slot(an);
      for (std::size_t i = 0; i < g.size(); ++i)
        if (take_a[i]) ga[i] += g[i];
    }
    if (bn >= 0) {
      auto& gb = t.grad_slot(bn);
      for (std::size_t i = 0; i < g.size(); ++i)
        if (!take_a[i]) gb[i] += g[i];
    }
  });
}

Tensor Tape::softmax_rows(const Tensor& a) {
  Tensor out(a.rows, a.cols);
  for (int r = 0; r < a.rows; ++r) {
    const double* x = a.data.data() + static_cast<std::size_t>(r) * a.cols;
    double* y = out.data.data() + static_cast<std::size_t>(r) * a.cols;
    double m = x[0];
    for (int c = 1; c < a.cols; ++c) m = std::max(m, x[c]);
    double sum = 0.0;
    for (int c = 0; c < a.cols; ++c) {
      y[c] = std::exp(x[c] - m);
      sum += y[c];
    }
    for (int c = 0; c < a.cols; ++c) y[c] /= sum;
  }
  const int an = a.node, rows = a.rows, cols = a.cols;
  std::vector<double> p = (an >= 0) ? out.data : std::vector<double>{};
  return finish(std::move(out), "softmax",
                [an, rows, cols, p = std::move(p)](Tape& t, const std::vector<double>& g) {
    if (an < 0) return;
    auto& ga = t.grad_slot(an);
    for (int r = 0; r < rows; ++r) {
      const std::size_t off = static_cast<std::size_t>(r) * cols;
      double dot = 0.0;
      for (int c = 0; c < cols; ++c) dot += g[off + c] * p[off + c];
      for (int c = 0; c < cols; ++c) ga[off + c] += p[off + c] * (g[off + c] - dot);
    }
  });
}

Tensor Tape::log_softmax_rows(const Tensor& a) {
  Tensor out(a.rows, a.cols);
  std::vector<double> p;
  const bool want_grad = grad_enabled_ && a.node >= 0;
  if (want_grad) p.resize(a.data.size());
  for (int r = 0; r < a.rows; ++r) {
    const double* x = a.data.data() + static_cast<std::size_t>(r) * a.cols;
    double* y = out.data.data() + static_cast<std::size_t>(r) * a.cols;
    double m = x[0];
    for (int c = 1; c < a.cols; ++c) m = std::max(m, x[c]);
    double sum = 0.0;
    for (int c = 0; c < a.cols; ++c) sum += std::exp(x[c] - m);
    const double lse = m + std::log(sum);
    for (int c = 0; c < a.cols; ++c) y[c] = x[c] - lse;
    if (want_grad) {
      for (int c = 0; c < a.cols; ++c)
        p[static_cast<std::size_t>(r) * a.cols + c] = std::exp(y[c]);
    }
  }
  const int an = a.node, rows = a.rows, cols = a.cols;
  return finish(std::move(out), "log_softmax",
                [an, rows, cols, p = std::move(p)](Tape& t, const std::vector<double>& g) {
    if (an < 0) return;
    auto& ga = t.grad_slot(an);
    for (int r = 0; r < rows; ++r) {
      const std::size_t off = static_cast<std::size_t>(r) * cols;
      double gsum = 0.0;
      for (int c = 0; c < cols; ++c) gsum += g[off + c];
      for (int c = 0; c < cols; ++c) ga[off + c] += g[off + c] - p[off + c] * gsum;
    }
  });
}

Tensor Tape::concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  const int cols = parts[0].cols;
  int rows = 0;
  for (const auto& p : parts) {
    if (p.cols != cols) throw ShapeError("concat_rows: column mismatch");
    rows += p.rows;
  }
  Tensor out(rows, cols);
  std::vector<int> nodes;
  std::vector<int> offsets;
  std::vector<int> sizes;
  int off = 0;
  for (const auto& p : parts) {
    std::copy(p.data.begin(), p.data.end(), out.data.begin() + off);
    nodes.push_back(p.node);
    offsets.push_back(off);
    sizes.push_back(p.size());
    off += p.size();
  }
  return finish(std::move(out), "concat_rows",
                [nodes = std::move(nodes), offsets = std::move(offsets),
                 sizes = std::move(sizes)](Tape& t, const std::vector<double>& g) {
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      if (nodes[k] < 0) continue;
      auto& gp = t.grad_slot(nodes[k]);
      for (int i = 0; i < sizes[k]; ++i) gp[i] += g[offsets[k] + i];
    }
  });
}

Tensor Tape::slice(const Tensor& a, int r0, int r1, int c0, int c1) {
  if (r0 < 0 || c0 < 0 || r1 > a.rows || c1 > a.cols || r0 >= r1 || c0 >= c1) {
    throw ShapeError("slice: bounds out of range for " + a.shape_str());
  }
  Tensor out(r1 - r0, c1 - c0);
  for (int r = r0; r < r1; ++r)
    for (int c = c0; c < c1; ++c) out.at(r - r0, c - c0) = a.at(r, c);
  const int an = a.node, acols = a.cols;
  return finish(std::move(out), "slice",
                [an, r0, r1, c0, c1, acols](Tape& t, const std::vector<double>& g) {
    if (an < 0) return;
    auto& ga = t.grad_slot(an);
    const int ocols = c1 - c0;
    for (int r = r0; r < r1; ++r)
      for (int c = c0; c < c1; ++c)
        ga[static_cast<std::size_t>(r) * acols + c] +=
            g[static_cast<std::size_t>(r - r0) * ocols + (c - c0)];
  });
}

Tensor Tape::sum_all(const Tensor& a) {
  double s = 0.0;
  for (double v : a.data) s += v;
  Tensor out = Tensor::scalar(s);
  const int an = a.node, n = a.size();
  return finish(std::move(out), "sum", [an, n](Tape& t, const std::vector<double>& g) {
    if (an < 0) return;
    auto& ga = t.grad_slot(an);
    for (int i = 0; i < n; ++i) ga[i] += g[0];
  });
}

Tensor Tape::mean_all(const Tensor& a) {
  double s = 0.0;
  for (double v : a.data) s += v;
  const int n = a.size();
  Tensor out = Tensor::scalar(s / n);
  const int an = a.node;
  return finish(std::move(out), "mean", [an, n](Tape& t, const std::vector<double>& g) {
    if (an < 0) return;
    auto& ga = t.grad_slot(an);
    const double gn = g[0] / n;
    for (int i = 0; i < n; ++i) ga[i] += gn;
  });
}

Tensor Tape::row_sum(const Tensor& a) {
  Tensor out(a.rows, 1);
  for (int r = 0; r < a.rows; ++r) {
    double s = 0.0;
    for (int c = 0; c < a.cols; ++c) s += a.at(r, c);
    out.data[r] = s;
  }
  const int an = a.node, rows = a.rows, cols = a.cols;
  return finish(std::move(out), "row_sum", [an, rows, cols](Tape& t, const std::vector<double>& g) {
    if (an < 0) return;
    auto& ga = t.grad_slot(an);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) ga[static_cast<std::size_t>(r) * cols + c] += g[r];
  });
}

Tensor Tape::col_mean(const Tensor& a) {
  Tensor out(1, a.cols);
  for (int c = 0; c < a.cols; ++c) {
    double s = 0.0;
    for (int r = 0; r < a.rows; ++r) s += a.at(r, c);
    out.data[c] = s / a.rows;
  }
  const int an = a.node, rows = a.rows, cols = a.cols;
  return finish(std::move(out), "col_mean", [an, rows, cols](Tape& t, const std::vector<double>& g) {
    if (an < 0) return;
    auto& ga = t.grad_slot(an);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) ga[static_cast<std::size_t>(r) * cols + c] += g[c] / rows;
  });
}

void Tape::backward(const Tensor& loss) {
  if (!grad_enabled_) throw ArgumentError("backward() on a tape with gradients disabled");
  if (loss.node < 0 || loss.node >= static_cast<int>(shapes_.size())) {
    throw ArgumentError("backward(): loss is not on this tape");
  }
  if (loss.size() != 1) throw ArgumentError("backward(): loss must be a scalar");
  grads_.assign(shapes_.size(), {});
  grad_slot(loss.node)[0] = 1.0;
  for (int i = loss.node; i >= 0; --i) {
    if (backward_fns_[i] && !grads_[i].empty()) {
      backward_fns_[i](*this, grads_[i]);
    }
  }
}

Tensor Tape::grad(const Tensor& t) const {
  if (t.node < 0 || t.node >= static_cast<int>(shapes_.size())) {
    throw ArgumentError("grad(): tensor is not registered on this tape");
  }
  Tensor g(t.rows, t.cols);
  if (t.node < static_cast<int>(grads_.size()) && !grads_[t.node].empty()) {
    g.data = grads_[t.node];
  }
  return g;
}

void Tape::clear() {
  shapes_.clear();
  backward_fns_.clear();
  grads_.clear();
}

std::pair<Tensor, Tensor> lstm_cell(Tape& tape, const Tensor& x, const Tensor& h, const Tensor& c,
                                    const LstmParams& p) {
  auto gate = [&](const Tensor& w, const Tensor& u, const Tensor& b) {
    return tape.add(tape.add(tape.matmul(x, w), tape.matmul(h, u)), b);
  };
  Tensor i = tape.sigmoid(gate(p.wi, p.ui, p.bi));
  Tensor f = tape.sigmoid(gate(p.wf, p.uf, p.bf));
  Tensor g = tape.tanh(gate(p.wg, p.ug, p.bg));
  Tensor o = tape.sigmoid(gate(p.wo, p.uo, p.bo));
  Tensor c_next = tape.add(tape.mul(f, c), tape.mul(i, g));
  Tensor h_next = tape.mul(o, tape.tanh(c_next));
  return {h_next, c_next};
}

Tensor scaled_dot_attention(Tape& tape, const Tensor& q, const Tensor& k, const Tensor& v) {
  if (q.cols != k.cols) {
    throw ShapeError("attention: query/key dims differ " + q.shape_str() + " vs " + k.shape_str());
  }
  if (k.rows != v.rows) {
    throw ShapeError("attention: key/value counts differ " + k.shape_str() + " vs " + v.shape_str());
  }
  Tensor scores = tape.scale(tape.matmul(q, tape.transpose(k)), 1.0 / std::sqrt(static_cast<double>(q.cols)));
  Tensor weights = tape.softmax_rows(scores);
  return tape.matmul(weights, v);
}

}  // namespace uavrl::ag
