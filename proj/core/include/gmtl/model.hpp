#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "gmtl/data.hpp"
#include "gmtl/rng.hpp"
#include "gmtl/tape.hpp"

namespace gmtl {

/// Cross-task information sharing gates. All of them are additive residual
/// updates computed from the other tower's pre-gate activations:
///   SiG   h2 = c2 + sigmoid(c1)
///   SiLG  h2 = c2 + sigmoid(c1) * c1
///   SoG   h2 = c2 + softmax(c1) * c1        (softmax down the position axis)
///   CAG   h2[i] = c2[i] + sum_j a[i,j] c2[j],  a = row-softmax(c1 W c2^T)
/// and mirrored for h1 with its own bilinear matrix in the CAG case.
enum class GateKind { None, SiG, CAG, SiLG, SoG };

enum class Level { Conv = 0, Pool = 1, Dense = 2 };

GateKind gate_from_name(std::string_view name);
std::string_view gate_name(GateKind g);
Level level_from_name(std::string_view name);
std::string_view level_name(Level l);

struct ModelConfig {
  std::size_t embedding_dim = 300;
  std::vector<std::size_t> filter_widths = {3, 4, 5};
  std::size_t filters_per_width = 32;
  std::size_t dense_hidden = 64;
  std::size_t personality_classes = 5;
  std::size_t emotion_classes = 7;
  GateKind gate = GateKind::None;
  std::vector<Level> placement = {Level::Conv, Level::Pool, Level::Dense};
  Activation activation = Activation::Relu;
  /// CAG attends over the receiving tower's own values as printed in its
  /// original description; this flag switches the attended values to the
  /// sending tower's.
  bool cag_cross_value = false;
  std::size_t personality_vocab = 0;
  std::size_t emotion_vocab = 0;

  std::size_t pooled_len() const {
    return filter_widths.size() * filters_per_width;
  }
  std::size_t max_filter_width() const;
  bool gated_at(Level l) const;
  void validate() const;
};

/// Named parameter registry with stable iteration order.
class Parameters {
 public:
  Tensor& add(const std::string& name, Tensor t);
  bool has(const std::string& name) const { return index_.count(name) != 0; }
  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;
  std::size_t count() const { return values_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  Tensor& at(std::size_t i) { return values_[i]; }
  const Tensor& at(std::size_t i) const { return values_[i]; }
  std::vector<Tensor*> pointers();
  std::vector<Tensor> snapshot() const { return values_; }
  void restore(const std::vector<Tensor>& snap);
  std::uint64_t digest() const;  // over raw value bytes, order-sensitive

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> values_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct Model {
  ModelConfig config;
  Parameters params;
};

/// Fresh parameters for the two towers (prefixes "p." and "e.") plus the
/// per-level bilinear matrices when the gate is CAG. Every tensor is drawn
/// from its own seed stream keyed by the parameter name, so tower "p" gets
/// identical initial values whether or not tower "e" exists.
Model init_model(const ModelConfig& config, std::uint64_t seed);

/// Activations at the tap points of one tower, post-gate where a gate is
/// placed at that level.
struct TowerState {
  std::vector<Tensor> conv_maps;  // one (L, F) map per filter width
  Tensor pooled;                  // (widths * F)
  Tensor dense_hidden;            // (H)
  Tensor logits;                  // task classes
  Tensor conv_concat() const;     // all maps flattened back to back
};

/// Applies one gate symmetrically to a pair of same-shape (positions,
/// channels) activations and returns the post-gate pair. `w12`/`w21` are
/// the bilinear matrices for CAG (ignored otherwise).
std::pair<NodeId, NodeId> gate_apply(Tape& tape, GateKind kind, NodeId c1,
                                     NodeId c2, NodeId w12, NodeId w21,
                                     bool cross_value = false);

/// Builds forward passes over a tape with the model parameters bound as
/// leaves (each parameter once, on first use).
class ModelGraph {
 public:
  ModelGraph(Tape& tape, const Model& model);

  /// Single tower, ignores any configured gate. task is "p" or "e".
  NodeId tower(const std::string& task, const std::vector<int>& tokens,
               TowerState* state = nullptr);

  /// Both towers coupled level by level at the configured placements.
  /// Token rows must have equal length when the conv level is gated.
  std::pair<NodeId, NodeId> pair(const std::vector<int>& tokens_p,
                                 const std::vector<int>& tokens_e,
                                 TowerState* state_p = nullptr,
                                 TowerState* state_e = nullptr);

  /// Gradient tensors aligned with model.params order; parameters that
  /// never entered the graph get zero gradients.
  std::vector<Tensor> grads() const;

  Tape& tape() { return *tape_; }

 private:
  NodeId param(const std::string& name);
  struct LevelNodes;  // per-tower intermediate nodes during pair()

  Tape* tape_;
  const Model* model_;
  std::unordered_map<std::string, NodeId> bound_;
};

/// Plain forward passes (fresh scratch tape inside).
TowerState tower_forward(const Model& model, const std::string& task,
                         const std::vector<int>& tokens);
std::pair<TowerState, TowerState> mtl_forward(const Model& model,
                                              const std::vector<int>& tokens_p,
                                              const std::vector<int>& tokens_e);

/// Self-contained checkpoint: model configuration, vocabularies, label
/// schemas, the run seed and every parameter tensor. Loading restores
/// bitwise-identical forward behavior.
struct Checkpoint {
  Model model;
  std::vector<std::string> vocab_p;
  std::vector<std::string> vocab_e;
  LabelSchema schema_p;
  LabelSchema schema_e;
  std::uint64_t seed = 0;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

/// JSON echo of the configuration, as stored in checkpoints and manifests.
std::string config_json(const ModelConfig& config);

}  // namespace gmtl
