#include "gmtl/objectives.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace gmtl {

NodeId multilabel_soft_margin(Tape& tape, NodeId logits,
                              const std::vector<int>& targets) {
  const Tensor& z = tape.value(logits);
  if (z.rank() != 1 || z.size() == 0)
    throw InvalidInput("multilabel_soft_margin: rank-1 logits required");
  if (targets.size() != z.size())
    throw InvalidInput("multilabel_soft_margin: target length mismatch");
  const std::size_t C = targets.size();
  Tensor pos({C}), neg({C});
  for (std::size_t i = 0; i < C; ++i) {
    if (targets[i] != 0 && targets[i] != 1)
      throw InvalidInput("multilabel_soft_margin: targets must be 0/1");
    pos.at(i) = static_cast<double>(targets[i]);
    neg.at(i) = 1.0 - pos.at(i);
  }
  const NodeId on = tape.weighted_sum(tape.log_sigmoid(logits), std::move(pos));
  const NodeId off = tape.weighted_sum(
      tape.log_sigmoid(tape.scale(logits, -1.0)), std::move(neg));
  const std::array<NodeId, 2> parts{on, off};
  return tape.scale(tape.sum(parts), -1.0 / static_cast<double>(C));
}

NodeId cross_entropy(Tape& tape, NodeId logits, std::size_t target) {
  const Tensor& z = tape.value(logits);
  if (z.rank() != 1 || z.size() == 0)
    throw InvalidInput("cross_entropy: rank-1 logits required");
  if (target >= z.size())
    throw InvalidInput("cross_entropy: class index out of range");
  const NodeId lse = tape.log_sum_exp(logits);
  const NodeId at = tape.pick(logits, target);
  const std::array<NodeId, 2> parts{lse, tape.scale(at, -1.0)};
  return tape.sum(parts);
}

NodeId joint_loss(Tape& tape, NodeId personality_part, NodeId emotion_part,
                  JointLossValue* out) {
  const std::array<NodeId, 2> parts{personality_part, emotion_part};
  const NodeId total = tape.sum(parts);
  if (out) {
    out->personality = tape.value(personality_part).at(0);
    out->emotion = tape.value(emotion_part).at(0);
    out->total = tape.value(total).at(0);
  }
  return total;
}

std::vector<int> decode_multilabel(const Tensor& logits, double threshold) {
  std::vector<int> bits(logits.size(), 0);
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double p = 1.0 / (1.0 + std::exp(-logits.at(i)));
    bits[i] = p > threshold ? 1 : 0;
  }
  return bits;
}

std::size_t decode_argmax(const Tensor& logits) {
  if (logits.size() == 0) throw InvalidInput("decode_argmax: empty logits");
  std::size_t best = 0;
  for (std::size_t i = 1; i < logits.size(); ++i)
    if (logits.at(i) > logits.at(best)) best = i;
  return best;
}

MultilabelMetrics metrics_multilabel(const std::vector<std::vector<int>>& preds,
                                     const std::vector<std::vector<int>>& golds) {
  if (preds.size() != golds.size())
    throw InvalidInput("metrics_multilabel: example count mismatch");
  if (preds.empty()) throw InvalidInput("metrics_multilabel: no examples");
  const std::size_t C = golds[0].size();

  MultilabelMetrics m;
  m.per_label.resize(C);
  std::size_t exact = 0;
  for (std::size_t e = 0; e < preds.size(); ++e) {
    if (preds[e].size() != C || golds[e].size() != C)
      throw InvalidInput("metrics_multilabel: label width mismatch");
    bool all_equal = true;
    for (std::size_t i = 0; i < C; ++i) {
      const bool p = preds[e][i] != 0, g = golds[e][i] != 0;
      if (p != g) all_equal = false;
      ConfusionCounts& c = m.per_label[i];
      if (p && g) ++c.tp;
      else if (p && !g) ++c.fp;
      else if (!p && g) ++c.fn;
      else ++c.tn;
    }
    if (all_equal) ++exact;
  }
  for (const ConfusionCounts& c : m.per_label) {
    m.micro.tp += c.tp;
    m.micro.fp += c.fp;
    m.micro.fn += c.fn;
    m.micro.tn += c.tn;
  }

  const auto safe_div = [](std::size_t num, std::size_t den, bool* flag) {
    if (den == 0) {
      if (flag) *flag = true;
      return 0.0;
    }
    return static_cast<double>(num) / static_cast<double>(den);
  };

  const std::size_t cells = preds.size() * C;
  m.accuracy = static_cast<double>(m.micro.tp + m.micro.tn) / static_cast<double>(cells);
  m.precision = safe_div(m.micro.tp, m.micro.tp + m.micro.fp, &m.precision_zero_den);
  m.recall = safe_div(m.micro.tp, m.micro.tp + m.micro.fn, &m.recall_zero_den);
  if (m.precision + m.recall > 0.0)
    m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  else
    m.f1_zero_den = true;

  double mp = 0.0, mr = 0.0, mf = 0.0;
  for (const ConfusionCounts& c : m.per_label) {
    const double p = safe_div(c.tp, c.tp + c.fp, nullptr);
    const double r = safe_div(c.tp, c.tp + c.fn, nullptr);
    mp += p;
    mr += r;
    mf += (p + r > 0.0) ? 2.0 * p * r / (p + r) : 0.0;
  }
  m.macro_precision = mp / static_cast<double>(C);
  m.macro_recall = mr / static_cast<double>(C);
  m.macro_f1 = mf / static_cast<double>(C);
  m.subset_accuracy = static_cast<double>(exact) / static_cast<double>(preds.size());
  return m;
}

double accuracy_multiclass(const std::vector<std::size_t>& preds,
                           const std::vector<std::size_t>& golds) {
  if (preds.size() != golds.size())
    throw InvalidInput("accuracy_multiclass: length mismatch");
  if (preds.empty()) throw InvalidInput("accuracy_multiclass: no examples");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < preds.size(); ++i)
    if (preds[i] == golds[i]) ++hit;
  return static_cast<double>(hit) / static_cast<double>(preds.size());
}

namespace {
std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}
}  // namespace

std::string metrics_kv(const MultilabelMetrics& p, double emotion_accuracy) {
  std::ostringstream os;
  os << "p_accuracy=" << fmt(p.accuracy) << "\n"
     << "p_precision=" << fmt(p.precision) << "\n"
     << "p_recall=" << fmt(p.recall) << "\n"
     << "p_f1=" << fmt(p.f1) << "\n"
     << "p_average=" << fmt(p.average()) << "\n"
     << "p_macro_precision=" << fmt(p.macro_precision) << "\n"
     << "p_macro_recall=" << fmt(p.macro_recall) << "\n"
     << "p_macro_f1=" << fmt(p.macro_f1) << "\n"
     << "p_subset_accuracy=" << fmt(p.subset_accuracy) << "\n"
     << "p_zero_denominator_flags=" << (p.precision_zero_den ? "P" : "")
     << (p.recall_zero_den ? "R" : "") << (p.f1_zero_den ? "F" : "") << "\n"
     << "e_accuracy=" << fmt(emotion_accuracy) << "\n";
  return os.str();
}

std::string metrics_csv_header() {
  return "p_accuracy,p_precision,p_recall,p_f1,p_average,"
         "p_macro_precision,p_macro_recall,p_macro_f1,p_subset_accuracy,"
         "e_accuracy";
}

std::string metrics_csv_row(const MultilabelMetrics& p, double emotion_accuracy) {
  std::ostringstream os;
  os << fmt(p.accuracy) << ',' << fmt(p.precision) << ',' << fmt(p.recall)
     << ',' << fmt(p.f1) << ',' << fmt(p.average()) << ','
     << fmt(p.macro_precision) << ',' << fmt(p.macro_recall) << ','
     << fmt(p.macro_f1) << ',' << fmt(p.subset_accuracy) << ','
     << fmt(emotion_accuracy);
  return os.str();
}

}  // namespace gmtl
