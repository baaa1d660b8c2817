#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gmtl/tensor.hpp"

namespace gmtl {

enum class Activation { Identity, Relu, Tanh };

Activation activation_from_name(std::string_view name);
std::string_view activation_name(Activation a);

/// Handle to a node on a Tape.
struct NodeId {
  std::uint32_t v = 0;
};

/// Reverse-mode differentiation tape. Each primitive appends one node
/// holding the forward value plus a pullback that scatters the node's
/// gradient into its parents. Parents always precede children, so a
/// reverse index sweep is a reverse topological order.
///
/// A tape is built fresh for every forward pass and thrown away after
/// backward(); parameters live outside the tape and enter as leaves.
class Tape {
 public:
  NodeId leaf(Tensor value);

  // --- elementwise / linear algebra -----------------------------------
  NodeId add(NodeId a, NodeId b);          // same shape
  NodeId mul(NodeId a, NodeId b);          // same shape, elementwise
  NodeId scale(NodeId a, double k);
  NodeId matmul(NodeId a, NodeId b);       // (p,q) x (q,r) -> (p,r)
  NodeId transpose(NodeId a);              // rank 2
  NodeId reshape(NodeId a, std::vector<std::size_t> shape);
  NodeId concat(std::span<const NodeId> vectors);  // rank-1 pieces

  NodeId relu(NodeId a);
  NodeId tanh_(NodeId a);
  NodeId sigmoid(NodeId a);
  NodeId log_sigmoid(NodeId a);
  NodeId activate(NodeId a, Activation act);

  /// Softmax along `axis` of a rank-1 or rank-2 tensor, computed with
  /// max-subtraction. axis 0 normalizes down each column, axis 1 along
  /// each row; for rank 1 the axis must be 0.
  NodeId softmax(NodeId a, int axis = 0);

  // --- model primitives ------------------------------------------------
  /// Valid 1-D convolution of x (n,d) with one filter w (h,d) and scalar
  /// bias, followed by `act`. Output has shape (n-h+1).
  NodeId conv1d_valid(NodeId x, NodeId w, NodeId bias, Activation act);

  /// Same convolution with a bank of filters w (F,h,d), bias (F).
  /// Output is position-major: shape (n-h+1, F).
  NodeId conv1d_bank(NodeId x, NodeId w, NodeId bias, Activation act);

  /// Global max over a rank-1 feature map; ties break to the first
  /// occurrence and the winning index receives the whole gradient.
  NodeId max_pool_global(NodeId c);
  std::size_t pool_argmax(NodeId pooled) const;

  /// Column-wise global max of a (L,F) map -> (F). argmax per column
  /// available via pool_argmaxes().
  NodeId max_pool_columns(NodeId c);
  const std::vector<std::size_t>& pool_argmaxes(NodeId pooled) const;

  /// y = x W + b with x (f), W (f,o), b (o).
  NodeId dense(NodeId x, NodeId w, NodeId b);

  /// Rows of `table` (V,d) selected by token ids -> (n,d). Gradient
  /// scatters additively back into the table rows.
  NodeId embedding_rows(NodeId table, std::vector<int> ids);

  // --- scalar reductions ------------------------------------------------
  NodeId weighted_sum(NodeId x, Tensor weights);   // <x, w> -> scalar
  NodeId log_sum_exp(NodeId x);                    // rank-1 -> scalar
  NodeId pick(NodeId x, std::size_t index);        // rank-1 -> scalar
  NodeId sum(std::span<const NodeId> scalars);     // scalars -> scalar

  // --- differentiation ---------------------------------------------------
  /// Seeds d(root)/d(root) = 1 and sweeps the tape in reverse. Leaf
  /// gradients accumulate across calls; interior gradients are recomputed
  /// from scratch each call. root must be scalar-valued.
  void backward(NodeId root);

  const Tensor& value(NodeId id) const { return nodes_[id.v].value; }
  const Tensor& grad(NodeId id) const { return nodes_[id.v].grad; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool is_leaf = false;
    bool touched = false;  // received gradient during current sweep
    std::function<void(Tape&)> pull;
    std::size_t aux = 0;                // max_pool_global argmax
    std::vector<std::size_t> aux_vec;   // max_pool_columns argmaxes
  };

  NodeId push(Tensor value, std::function<void(Tape&)> pull, bool is_leaf = false);
  NodeId next_id() const;  // id the next push will receive
  Tensor& grad_mut(NodeId id) { return nodes_[id.v].grad; }
  void accumulate(NodeId id, std::size_t flat_index, double g);
  void accumulate_all(NodeId id, const Tensor& g);

  std::vector<Node> nodes_;
};

/// Loss callable used by grad_check and the trainers: returns the scalar
/// value at the current parameter values; when `grads` is non-null it must
/// also be filled with d(loss)/d(param), aligned with the params span.
using LossFn = std::function<double(std::vector<Tensor>* grads)>;

/// Central-difference gradient check. Returns the max over all parameter
/// entries of |analytic - numeric| / max(1, |numeric|).
double grad_check(std::span<Tensor* const> params, const LossFn& fn,
                  double step = 1e-5);

}  // namespace gmtl
