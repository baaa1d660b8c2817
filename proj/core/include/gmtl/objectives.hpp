#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "gmtl/tape.hpp"

namespace gmtl {

/// Multilabel soft margin loss over raw logits z and a 0/1 target vector y:
///   L = -(1/C) * sum_i [ y_i * logsig(z_i) + (1 - y_i) * logsig(-z_i) ]
/// built from the tape's stable log-sigmoid, so it is safe for |z| up to
/// several hundred. Returns a scalar node.
NodeId multilabel_soft_margin(Tape& tape, NodeId logits,
                              const std::vector<int>& targets);

/// Cross entropy over raw logits via log-sum-exp: L = lse(z) - z[target].
NodeId cross_entropy(Tape& tape, NodeId logits, std::size_t target);

struct JointLossValue {
  double total = 0.0;
  double personality = 0.0;
  double emotion = 0.0;
};

/// total = personality + emotion, with the parts kept for reporting.
NodeId joint_loss(Tape& tape, NodeId personality_part, NodeId emotion_part,
                  JointLossValue* out = nullptr);

/// bit i set iff sigmoid(logit_i) > threshold; for the default 0.5 this is
/// exactly logit_i > 0.
std::vector<int> decode_multilabel(const Tensor& logits, double threshold = 0.5);

/// First index attaining the maximum.
std::size_t decode_argmax(const Tensor& logits);

struct ConfusionCounts {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

struct MultilabelMetrics {
  // Micro-averaged over all (example, label) cells; primary figures.
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  // Macro: per-label metrics averaged over labels.
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  // Exact-match over whole label vectors, recorded as an extra column.
  double subset_accuracy = 0.0;
  ConfusionCounts micro;
  std::vector<ConfusionCounts> per_label;
  // Set when a zero denominator forced the corresponding metric to 0.
  bool precision_zero_den = false;
  bool recall_zero_den = false;
  bool f1_zero_den = false;

  double average() const { return (accuracy + precision + recall + f1) / 4.0; }
};

MultilabelMetrics metrics_multilabel(const std::vector<std::vector<int>>& preds,
                                     const std::vector<std::vector<int>>& golds);

double accuracy_multiclass(const std::vector<std::size_t>& preds,
                           const std::vector<std::size_t>& golds);

// Flat serializations used by the CLI: a key/value block and one CSV row.
// CSV column order matches metrics_csv_header().
std::string metrics_kv(const MultilabelMetrics& p, double emotion_accuracy);
std::string metrics_csv_header();
std::string metrics_csv_row(const MultilabelMetrics& p, double emotion_accuracy);

}  // namespace gmtl
