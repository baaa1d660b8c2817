#include "gmtl/tape.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace gmtl {

Activation activation_from_name(std::string_view name) {
  if (name == "relu") return Activation::Relu;
  if (name == "tanh") return Activation::Tanh;
  if (name == "identity") return Activation::Identity;
  throw InvalidInput("unknown activation: " + std::string(name));
}

std::string_view activation_name(Activation a) {
  switch (a) {
    case Activation::Relu: return "relu";
    case Activation::Tanh: return "tanh";
    case Activation::Identity: return "identity";
  }
  return "identity";
}

namespace {

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double stable_log_sigmoid(double x) {
  if (x >= 0.0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

// act'(pre) expressed through the activated output; valid for the three
// activations used here.
double act_deriv_from_out(Activation act, double out) {
  switch (act) {
    case Activation::Identity: return 1.0;
    case Activation::Relu: return out > 0.0 ? 1.0 : 0.0;
    case Activation::Tanh: return 1.0 - out * out;
  }
  return 1.0;
}

}  // namespace

NodeId Tape::push(Tensor value, std::function<void(Tape&)> pull, bool is_leaf) {
  Node n;
  n.grad = Tensor(value.shape());
  n.value = std::move(value);
  n.is_leaf = is_leaf;
  n.pull = std::move(pull);
  nodes_.push_back(std::move(n));
  return NodeId{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

NodeId Tape::next_id() const {
  return NodeId{static_cast<std::uint32_t>(nodes_.size())};
}

void Tape::accumulate(NodeId id, std::size_t flat_index, double g) {
  nodes_[id.v].grad.at(flat_index) += g;
  nodes_[id.v].touched = true;
}

void Tape::accumulate_all(NodeId id, const Tensor& g) {
  axpy(1.0, g, nodes_[id.v].grad);
  nodes_[id.v].touched = true;
}

NodeId Tape::leaf(Tensor value) { return push(std::move(value), nullptr, true); }

NodeId Tape::add(NodeId a, NodeId b) {
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  if (!va.same_shape(vb)) throw InvalidInput("add: shape mismatch");
  Tensor out(va.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out.at(i) = va.at(i) + vb.at(i);
  const NodeId self = next_id();
  push(std::move(out), [a, b, self](Tape& t) {
    t.accumulate_all(a, t.grad(self));
    t.accumulate_all(b, t.grad(self));
  });
  return self;
}

NodeId Tape::mul(NodeId a, NodeId b) {
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  if (!va.same_shape(vb)) throw InvalidInput("mul: shape mismatch");
  Tensor out(va.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out.at(i) = va.at(i) * vb.at(i);
  const NodeId self = next_id();
  push(std::move(out), [a, b, self](Tape& t) {
    const Tensor& g = t.grad(self);
    const Tensor& va2 = t.value(a);
    const Tensor& vb2 = t.value(b);
    for (std::size_t i = 0; i < g.size(); ++i) {
      t.accumulate(a, i, g.at(i) * vb2.at(i));
      t.accumulate(b, i, g.at(i) * va2.at(i));
    }
  });
  return self;
}

NodeId Tape::scale(NodeId a, double k) {
  const Tensor& va = value(a);
  Tensor out(va.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out.at(i) = k * va.at(i);
  const NodeId self = next_id();
  push(std::move(out), [a, k, self](Tape& t) {
    const Tensor& g = t.grad(self);
    for (std::size_t i = 0; i < g.size(); ++i) t.accumulate(a, i, k * g.at(i));
  });
  return self;
}

NodeId Tape::matmul(NodeId a, NodeId b) {
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  if (va.rank() != 2 || vb.rank() != 2 || va.cols() != vb.rows())
    throw InvalidInput("matmul: shape mismatch");
  const std::size_t p = va.rows(), q = va.cols(), r = vb.cols();
  Tensor out({p, r});
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t k = 0; k < q; ++k) {
      const double aik = va.at2(i, k);
      for (std::size_t j = 0; j < r; ++j) out.at2(i, j) += aik * vb.at2(k, j);
    }
  const NodeId self = next_id();
  push(std::move(out), [a, b, p, q, r, self](Tape& t) {
    const Tensor& g = t.grad(self);
    const Tensor& va2 = t.value(a);
    const Tensor& vb2 = t.value(b);
    // dA += g B^T ; dB += A^T g
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t k = 0; k < q; ++k) {
        double s = 0.0;
        for (std::size_t j = 0; j < r; ++j) s += g.at2(i, j) * vb2.at2(k, j);
        t.accumulate(a, i * q + k, s);
      }
    for (std::size_t k = 0; k < q; ++k)
      for (std::size_t j = 0; j < r; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < p; ++i) s += va2.at2(i, k) * g.at2(i, j);
        t.accumulate(b, k * r + j, s);
      }
  });
  return self;
}

NodeId Tape::transpose(NodeId a) {
  const Tensor& va = value(a);
  if (va.rank() != 2) throw InvalidInput("transpose: rank-2 input required");
  const std::size_t r = va.rows(), c = va.cols();
  Tensor out({c, r});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out.at2(j, i) = va.at2(i, j);
  const NodeId self = next_id();
  push(std::move(out), [a, r, c, self](Tape& t) {
    const Tensor& g = t.grad(self);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j)
        t.accumulate(a, i * c + j, g.at2(j, i));
  });
  return self;
}

NodeId Tape::reshape(NodeId a, std::vector<std::size_t> shape) {
  const Tensor& va = value(a);
  Tensor out(std::move(shape), va.vec());
  const NodeId self = next_id();
  push(std::move(out), [a, self](Tape& t) {
    const Tensor& g = t.grad(self);
    for (std::size_t i = 0; i < g.size(); ++i) t.accumulate(a, i, g.at(i));
  });
  return self;
}

NodeId Tape::concat(std::span<const NodeId> vectors) {
  if (vectors.empty()) throw InvalidInput("concat: no inputs");
  std::size_t total = 0;
  for (NodeId id : vectors) {
    if (value(id).rank() != 1) throw InvalidInput("concat: rank-1 inputs required");
    total += value(id).size();
  }
  Tensor out({total});
  std::size_t off = 0;
  for (NodeId id : vectors) {
    const Tensor& v = value(id);
    for (std::size_t i = 0; i < v.size(); ++i) out.at(off + i) = v.at(i);
    off += v.size();
  }
  std::vector<NodeId> parents(vectors.begin(), vectors.end());
  const NodeId self = next_id();
  push(std::move(out), [parents, self](Tape& t) {
    const Tensor& g = t.grad(self);
    std::size_t off2 = 0;
    for (NodeId id : parents) {
      const std::size_t n = t.value(id).size();
      for (std::size_t i = 0; i < n; ++i) t.accumulate(id, i, g.at(off2 + i));
      off2 += n;
    }
  });
  return self;
}

NodeId Tape::relu(NodeId a) {
  const Tensor& va = value(a);
  Tensor out(va.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out.at(i) = std::max(0.0, va.at(i));
  const NodeId self = next_id();
  push(std::move(out), [a, self](Tape& t) {
    const Tensor& g = t.grad(self);
    const Tensor& o = t.value(self);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (o.at(i) > 0.0) t.accumulate(a, i, g.at(i));
  });
  return self;
}

NodeId Tape::tanh_(NodeId a) {
  const Tensor& va = value(a);
  Tensor out(va.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out.at(i) = std::tanh(va.at(i));
  const NodeId self = next_id();
  push(std::move(out), [a, self](Tape& t) {
    const Tensor& g = t.grad(self);
    const Tensor& o = t.value(self);
    for (std::size_t i = 0; i < g.size(); ++i)
      t.accumulate(a, i, g.at(i) * (1.0 - o.at(i) * o.at(i)));
  });
  return self;
}

NodeId Tape::sigmoid(NodeId a) {
  const Tensor& va = value(a);
  Tensor out(va.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out.at(i) = stable_sigmoid(va.at(i));
  const NodeId self = next_id();
  push(std::move(out), [a, self](Tape& t) {
    const Tensor& g = t.grad(self);
    const Tensor& o = t.value(self);
    for (std::size_t i = 0; i < g.size(); ++i)
      t.accumulate(a, i, g.at(i) * o.at(i) * (1.0 - o.at(i)));
  });
  return self;
}

NodeId Tape::log_sigmoid(NodeId a) {
  const Tensor& va = value(a);
  Tensor out(va.shape());
  for (std::size_t i = 0; i < out.size(); ++i)
    out.at(i) = stable_log_sigmoid(va.at(i));
  const NodeId self = next_id();
  push(std::move(out), [a, self](Tape& t) {
    const Tensor& g = t.grad(self);
    const Tensor& x = t.value(a);
    for (std::size_t i = 0; i < g.size(); ++i)
      t.accumulate(a, i, g.at(i) * stable_sigmoid(-x.at(i)));  // d/dx logsig = sig(-x)
  });
  return self;
}

NodeId Tape::activate(NodeId a, Activation act) {
  switch (act) {
    case Activation::Identity: return scale(a, 1.0);
    case Activation::Relu: return relu(a);
    case Activation::Tanh: return tanh_(a);
  }
  return a;
}

namespace {
// Flat index of element k of softmax slice s. Slices run along `axis`.
std::size_t sm_flat(bool rank1, int axis, std::size_t cols, std::size_t s,
                    std::size_t k) {
  if (rank1) return k;
  return axis == 0 ? k * cols + s : s * cols + k;
}
}  // namespace

NodeId Tape::softmax(NodeId a, int axis) {
  const Tensor& va = value(a);
  if (va.rank() > 2) throw InvalidInput("softmax: rank-1 or rank-2 input required");
  if (va.rank() == 1 && axis != 0) throw InvalidInput("softmax: bad axis");
  if (axis != 0 && axis != 1) throw InvalidInput("softmax: bad axis");

  const bool rank1 = va.rank() == 1;
  const std::size_t rows = rank1 ? va.size() : va.rows();
  const std::size_t cols = rank1 ? 1 : va.cols();
  const std::size_t n_slices = rank1 ? 1 : (axis == 0 ? cols : rows);
  const std::size_t slice_len = rank1 ? va.size() : (axis == 0 ? rows : cols);

  Tensor out(va.shape());
  for (std::size_t s = 0; s < n_slices; ++s) {
    double m = va.at(sm_flat(rank1, axis, cols, s, 0));
    for (std::size_t k = 1; k < slice_len; ++k)
      m = std::max(m, va.at(sm_flat(rank1, axis, cols, s, k)));
    double z = 0.0;
    for (std::size_t k = 0; k < slice_len; ++k) {
      const double e = std::exp(va.at(sm_flat(rank1, axis, cols, s, k)) - m);
      out.at(sm_flat(rank1, axis, cols, s, k)) = e;
      z += e;
    }
    for (std::size_t k = 0; k < slice_len; ++k)
      out.at(sm_flat(rank1, axis, cols, s, k)) /= z;
  }

  const NodeId self = next_id();
  push(std::move(out),
       [a, rank1, axis, cols, n_slices, slice_len, self](Tape& t) {
         const Tensor& g = t.grad(self);
         const Tensor& y = t.value(self);
         // dx = y * (g - <g, y>) per slice
         for (std::size_t s = 0; s < n_slices; ++s) {
           double dot = 0.0;
           for (std::size_t k = 0; k < slice_len; ++k) {
             const std::size_t ix = sm_flat(rank1, axis, cols, s, k);
             dot += g.at(ix) * y.at(ix);
           }
           for (std::size_t k = 0; k < slice_len; ++k) {
             const std::size_t ix = sm_flat(rank1, axis, cols, s, k);
             t.accumulate(a, ix, y.at(ix) * (g.at(ix) - dot));
           }
         }
       });
  return self;
}

NodeId Tape::conv1d_valid(NodeId x, NodeId w, NodeId bias, Activation act) {
  const Tensor& vx = value(x);
  const Tensor& vw = value(w);
  const Tensor& vb = value(bias);
  if (vx.rank() != 2 || vw.rank() != 2) throw InvalidInput("conv1d_valid: rank-2 x and w required");
  if (vb.size() != 1) throw InvalidInput("conv1d_valid: scalar bias required");
  const std::size_t n = vx.rows(), d = vx.cols(), h = vw.rows();
  if (vw.cols() != d) throw InvalidInput("conv1d_valid: filter width mismatch");
  if (n < h || h < 1) throw InvalidInput("conv1d_valid: input shorter than filter");

  const std::size_t L = n - h + 1;
  Tensor out({L});
  for (std::size_t i = 0; i < L; ++i) {
    double s = vb.at(0);
    for (std::size_t r = 0; r < h; ++r)
      for (std::size_t c = 0; c < d; ++c) s += vx.at2(i + r, c) * vw.at2(r, c);
    switch (act) {
      case Activation::Identity: out.at(i) = s; break;
      case Activation::Relu: out.at(i) = std::max(0.0, s); break;
      case Activation::Tanh: out.at(i) = std::tanh(s); break;
    }
  }
  const NodeId self = next_id();
  push(std::move(out), [x, w, bias, h, d, L, act, self](Tape& t) {
    const Tensor& g = t.grad(self);
    const Tensor& o = t.value(self);
    const Tensor& vx2 = t.value(x);
    const Tensor& vw2 = t.value(w);
    for (std::size_t i = 0; i < L; ++i) {
      const double gp = g.at(i) * act_deriv_from_out(act, o.at(i));
      if (gp == 0.0) continue;
      t.accumulate(bias, 0, gp);
      for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < d; ++c) {
          t.accumulate(x, (i + r) * d + c, gp * vw2.at2(r, c));
          t.accumulate(w, r * d + c, gp * vx2.at2(i + r, c));
        }
    }
  });
  return self;
}

NodeId Tape::conv1d_bank(NodeId x, NodeId w, NodeId bias, Activation act) {
  const Tensor& vx = value(x);
  const Tensor& vw = value(w);
  const Tensor& vb = value(bias);
  if (vx.rank() != 2 || vw.rank() != 3) throw InvalidInput("conv1d_bank: x (n,d), w (F,h,d) required");
  const std::size_t n = vx.rows(), d = vx.cols();
  const std::size_t F = vw.shape()[0], h = vw.shape()[1];
  if (vw.shape()[2] != d) throw InvalidInput("conv1d_bank: embedding dim mismatch");
  if (vb.size() != F) throw InvalidInput("conv1d_bank: bias length mismatch");
  if (n < h || h < 1) throw InvalidInput("conv1d_bank: input shorter than filter");

  const std::size_t L = n - h + 1;
  Tensor out({L, F});
  for (std::size_t i = 0; i < L; ++i)
    for (std::size_t f = 0; f < F; ++f) {
      double s = vb.at(f);
      for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < d; ++c) s += vx.at2(i + r, c) * vw.at3(f, r, c);
      switch (act) {
        case Activation::Identity: out.at2(i, f) = s; break;
        case Activation::Relu: out.at2(i, f) = std::max(0.0, s); break;
        case Activation::Tanh: out.at2(i, f) = std::tanh(s); break;
      }
    }
  const NodeId self = next_id();
  push(std::move(out), [x, w, bias, F, h, d, L, act, self](Tape& t) {
    const Tensor& g = t.grad(self);
    const Tensor& o = t.value(self);
    const Tensor& vx2 = t.value(x);
    const Tensor& vw2 = t.value(w);
    for (std::size_t i = 0; i < L; ++i)
      for (std::size_t f = 0; f < F; ++f) {
        const double gp = g.at2(i, f) * act_deriv_from_out(act, o.at2(i, f));
        if (gp == 0.0) continue;
        t.accumulate(bias, f, gp);
        for (std::size_t r = 0; r < h; ++r)
          for (std::size_t c = 0; c < d; ++c) {
            t.accumulate(x, (i + r) * d + c, gp * vw2.at3(f, r, c));
            t.accumulate(w, (f * h + r) * d + c, gp * vx2.at2(i + r, c));
          }
      }
  });
  return self;
}

NodeId Tape::max_pool_global(NodeId c) {
  const Tensor& vc = value(c);
  if (vc.rank() != 1 || vc.size() == 0)
    throw InvalidInput("max_pool_global: non-empty rank-1 input required");
  std::size_t best = 0;
  for (std::size_t i = 1; i < vc.size(); ++i)
    if (vc.at(i) > vc.at(best)) best = i;  // strict: first occurrence wins
  const NodeId self = next_id();
  push(Tensor::scalar(vc.at(best)), [c, best, self](Tape& t) {
    t.accumulate(c, best, t.grad(self).at(0));
  });
  nodes_[self.v].aux = best;
  return self;
}

std::size_t Tape::pool_argmax(NodeId pooled) const { return nodes_[pooled.v].aux; }

NodeId Tape::max_pool_columns(NodeId c) {
  const Tensor& vc = value(c);
  if (vc.rank() != 2) throw InvalidInput("max_pool_columns: rank-2 input required");
  const std::size_t L = vc.rows(), F = vc.cols();
  Tensor out({F});
  std::vector<std::size_t> arg(F, 0);
  for (std::size_t f = 0; f < F; ++f) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < L; ++i)
      if (vc.at2(i, f) > vc.at2(best, f)) best = i;
    arg[f] = best;
    out.at(f) = vc.at2(best, f);
  }
  const NodeId self = next_id();
  push(std::move(out), [c, arg, F, self](Tape& t) {
    const Tensor& g = t.grad(self);
    const std::size_t cols = t.value(c).cols();
    for (std::size_t f = 0; f < F; ++f)
      t.accumulate(c, arg[f] * cols + f, g.at(f));
  });
  nodes_[self.v].aux_vec = std::move(arg);
  return self;
}

const std::vector<std::size_t>& Tape::pool_argmaxes(NodeId pooled) const {
  return nodes_[pooled.v].aux_vec;
}

NodeId Tape::dense(NodeId x, NodeId w, NodeId b) {
  const Tensor& vx = value(x);
  const Tensor& vw = value(w);
  const Tensor& vb = value(b);
  if (vx.rank() != 1 || vw.rank() != 2 || vb.rank() != 1 ||
      vw.rows() != vx.size() || vw.cols() != vb.size())
    throw InvalidInput("dense: shape mismatch");
  const std::size_t f = vx.size(), o = vb.size();
  Tensor out({o});
  for (std::size_t j = 0; j < o; ++j) {
    double s = vb.at(j);
    for (std::size_t i = 0; i < f; ++i) s += vx.at(i) * vw.at2(i, j);
    out.at(j) = s;
  }
  const NodeId self = next_id();
  push(std::move(out), [x, w, b, f, o, self](Tape& t) {
    const Tensor& g = t.grad(self);
    const Tensor& vx2 = t.value(x);
    const Tensor& vw2 = t.value(w);
    for (std::size_t j = 0; j < o; ++j) {
      const double gj = g.at(j);
      if (gj == 0.0) continue;
      t.accumulate(b, j, gj);
      for (std::size_t i = 0; i < f; ++i) {
        t.accumulate(x, i, gj * vw2.at2(i, j));
        t.accumulate(w, i * o + j, gj * vx2.at(i));
      }
    }
  });
  return self;
}

NodeId Tape::embedding_rows(NodeId table, std::vector<int> ids) {
  const Tensor& vt = value(table);
  if (vt.rank() != 2) throw InvalidInput("embedding_rows: rank-2 table required");
  if (ids.empty()) throw InvalidInput("embedding_rows: empty id list");
  const std::size_t V = vt.rows(), d = vt.cols();
  Tensor out({ids.size(), d});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= V)
      throw InvalidInput("embedding_rows: token id out of range");
    for (std::size_t c = 0; c < d; ++c)
      out.at2(i, c) = vt.at2(static_cast<std::size_t>(ids[i]), c);
  }
  const NodeId self = next_id();
  push(std::move(out), [table, ids = std::move(ids), d, self](Tape& t) {
    const Tensor& g = t.grad(self);
    for (std::size_t i = 0; i < ids.size(); ++i)
      for (std::size_t c = 0; c < d; ++c)
        t.accumulate(table, static_cast<std::size_t>(ids[i]) * d + c, g.at2(i, c));
  });
  return self;
}

NodeId Tape::weighted_sum(NodeId x, Tensor weights) {
  const Tensor& vx = value(x);
  if (vx.size() != weights.size()) throw InvalidInput("weighted_sum: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < vx.size(); ++i) s += vx.at(i) * weights.at(i);
  const NodeId self = next_id();
  push(Tensor::scalar(s), [x, w = std::move(weights), self](Tape& t) {
    const double g = t.grad(self).at(0);
    for (std::size_t i = 0; i < w.size(); ++i) t.accumulate(x, i, g * w.at(i));
  });
  return self;
}

NodeId Tape::log_sum_exp(NodeId x) {
  const Tensor& vx = value(x);
  if (vx.rank() != 1 || vx.size() == 0)
    throw InvalidInput("log_sum_exp: non-empty rank-1 input required");
  double m = vx.at(0);
  for (std::size_t i = 1; i < vx.size(); ++i) m = std::max(m, vx.at(i));
  double z = 0.0;
  for (std::size_t i = 0; i < vx.size(); ++i) z += std::exp(vx.at(i) - m);
  const NodeId self = next_id();
  push(Tensor::scalar(m + std::log(z)), [x, self](Tape& t) {
    const double g = t.grad(self).at(0);
    const Tensor& vx2 = t.value(x);
    const double lse = t.value(self).at(0);
    for (std::size_t i = 0; i < vx2.size(); ++i)
      t.accumulate(x, i, g * std::exp(vx2.at(i) - lse));
  });
  return self;
}

NodeId Tape::pick(NodeId x, std::size_t index) {
  const Tensor& vx = value(x);
  if (index >= vx.size()) throw InvalidInput("pick: index out of range");
  const NodeId self = next_id();
  push(Tensor::scalar(vx.at(index)), [x, index, self](Tape& t) {
    t.accumulate(x, index, t.grad(self).at(0));
  });
  return self;
}

NodeId Tape::sum(std::span<const NodeId> scalars) {
  if (scalars.empty()) throw InvalidInput("sum: no inputs");
  double s = 0.0;
  for (NodeId id : scalars) {
    if (value(id).size() != 1) throw InvalidInput("sum: scalar inputs required");
    s += value(id).at(0);
  }
  std::vector<NodeId> parents(scalars.begin(), scalars.end());
  const NodeId self = next_id();
  push(Tensor::scalar(s), [parents, self](Tape& t) {
    const double g = t.grad(self).at(0);
    for (NodeId id : parents) t.accumulate(id, 0, g);
  });
  return self;
}

void Tape::backward(NodeId root) {
  if (value(root).size() != 1)
    throw InvalidInput("backward: root must be scalar-valued");
  // Interior gradients are recomputed per sweep; leaf gradients accumulate.
  for (std::uint32_t i = 0; i <= root.v; ++i) {
    nodes_[i].touched = false;
    if (!nodes_[i].is_leaf) nodes_[i].grad.fill(0.0);
  }
  accumulate(root, 0, 1.0);
  for (std::uint32_t i = root.v + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.touched && n.pull) n.pull(*this);
  }
}

double grad_check(std::span<Tensor* const> params, const LossFn& fn, double step) {
  std::vector<Tensor> analytic;
  fn(&analytic);
  if (analytic.size() != params.size())
    throw InvalidInput("grad_check: gradient count mismatch");

  double worst = 0.0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor& t = *params[p];
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double saved = t.at(i);
      t.at(i) = saved + step;
      const double fp = fn(nullptr);
      t.at(i) = saved - step;
      const double fm = fn(nullptr);
      t.at(i) = saved;
      const double numeric = (fp - fm) / (2.0 * step);
      const double err = std::fabs(analytic[p].at(i) - numeric) /
                         std::max(1.0, std::fabs(numeric));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace gmtl
