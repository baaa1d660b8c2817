#include "gmtl/trainer.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace gmtl {

Optimizer optimizer_from_name(std::string_view name) {
  if (name == "adam") return Optimizer::Adam;
  if (name == "maml") return Optimizer::MamlLike;
  throw InvalidInput("unknown optimizer: " + std::string(name));
}

std::string_view optimizer_name(Optimizer o) {
  return o == Optimizer::Adam ? "adam" : "maml";
}

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw InvalidInput("learning rate must be positive");
  if (k < 1) throw InvalidInput("k must be >= 1");
  if (!(beta1 > 0.0 && beta1 < 1.0 && beta2 > 0.0 && beta2 < 1.0))
    throw InvalidInput("adam betas must lie in (0, 1)");
  if (!(eps > 0.0)) throw InvalidInput("adam epsilon must be positive");
  if (batch_p == 0 || batch_e == 0) throw InvalidInput("batch sizes must be >= 1");
  if (epochs == 0) throw InvalidInput("epoch count must be >= 1");
  if (inner_lr >= 0.0 && optimizer != Optimizer::MamlLike) {
    // harmless, but only the maml-like loop reads it
  }
}

void adam_step(Tensor& param, const Tensor& grad, Tensor& m, Tensor& v,
               std::size_t t, double lr, double beta1, double beta2,
               double eps) {
  if (!param.same_shape(grad) || !param.same_shape(m) || !param.same_shape(v))
    throw InvalidInput("adam_step: shape mismatch");
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad.at(i);
    m.at(i) = beta1 * m.at(i) + (1.0 - beta1) * g;
    v.at(i) = beta2 * v.at(i) + (1.0 - beta2) * g * g;
    const double mhat = m.at(i) / bc1;
    const double vhat = v.at(i) / bc2;
    param.at(i) -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

AdamState::AdamState(const Parameters& params) {
  m_.reserve(params.count());
  v_.reserve(params.count());
  for (std::size_t i = 0; i < params.count(); ++i) {
    m_.emplace_back(params.at(i).shape());
    v_.emplace_back(params.at(i).shape());
  }
}

void AdamState::step(Parameters& params, const std::vector<Tensor>& grads,
                     const TrainConfig& hp) {
  if (grads.size() != params.count())
    throw InvalidInput("adam: gradient count mismatch");
  ++t_;
  for (std::size_t i = 0; i < params.count(); ++i)
    adam_step(params.at(i), grads[i], m_[i], v_[i], t_, hp.lr, hp.beta1,
              hp.beta2, hp.eps);
}

namespace {

struct PaddedPair {
  std::vector<std::vector<int>> p;
  std::vector<std::vector<int>> e;
};

PaddedPair pad_pair(const Model& model, const Batch& batch_p,
                    const Batch& batch_e) {
  const std::size_t n = std::min(batch_p.size(), batch_e.size());
  if (n == 0) throw InvalidInput("empty batch pair");
  Batch bp, be;
  bp.items.assign(batch_p.items.begin(), batch_p.items.begin() + static_cast<std::ptrdiff_t>(n));
  be.items.assign(batch_e.items.begin(), batch_e.items.begin() + static_cast<std::ptrdiff_t>(n));
  const std::size_t wmax = model.config.max_filter_width();
  PaddedPair out;
  if (model.config.gated_at(Level::Conv)) {
    // Conv-level gating couples same-width feature maps, so both sides of
    // the pair share one padded length.
    std::size_t longest = wmax;
    for (const Example* ex : bp.items) longest = std::max(longest, ex->tokens.size());
    for (const Example* ex : be.items) longest = std::max(longest, ex->tokens.size());
    out.p = padded_tokens(bp, longest);
    out.e = padded_tokens(be, longest);
  } else {
    out.p = padded_tokens(bp, wmax);
    out.e = padded_tokens(be, wmax);
  }
  return out;
}

double guard_finite(double loss) {
  if (!std::isfinite(loss))
    throw NumericError("training loss is not finite");
  return loss;
}

}  // namespace

StepResult joint_step_gradients(const Model& model, const Batch& batch_p,
                                const Batch& batch_e) {
  PaddedPair toks = pad_pair(model, batch_p, batch_e);
  const std::size_t n = toks.p.size();

  Tape tape;
  ModelGraph graph(tape, model);
  std::vector<NodeId> losses_p, losses_e;
  losses_p.reserve(n);
  losses_e.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto [logit_p, logit_e] = graph.pair(toks.p[i], toks.e[i]);
    losses_p.push_back(
        multilabel_soft_margin(tape, logit_p, batch_p.items[i]->label.bits));
    losses_e.push_back(cross_entropy(tape, logit_e, batch_e.items[i]->label.index));
  }
  const double inv = 1.0 / static_cast<double>(n);
  const NodeId loss_p = tape.scale(tape.sum(losses_p), inv);
  const NodeId loss_e = tape.scale(tape.sum(losses_e), inv);
  StepResult res;
  const NodeId total = joint_loss(tape, loss_p, loss_e, &res.loss);
  guard_finite(res.loss.total);
  tape.backward(total);
  res.grads = graph.grads();
  res.pairs = n;
  return res;
}

double maml_outer_step(
    Parameters& params, AdamState& adam, const TrainConfig& hp,
    const std::function<std::pair<double, std::vector<Tensor>>(std::size_t)>&
        grad_eval) {
  const std::vector<Tensor> theta0 = params.snapshot();
  std::vector<Tensor> meta_grad;
  meta_grad.reserve(params.count());
  for (std::size_t i = 0; i < params.count(); ++i)
    meta_grad.emplace_back(params.at(i).shape());

  const double r_inner = hp.effective_inner_lr();
  double loss_sum = 0.0;
  for (std::size_t j = 0; j < hp.k; ++j) {
    auto [loss, grads] = grad_eval(j);
    loss_sum += guard_finite(loss);
    if (grads.size() != params.count())
      throw InvalidInput("maml_outer_step: gradient count mismatch");
    for (std::size_t i = 0; i < params.count(); ++i) {
      axpy(1.0, grads[i], meta_grad[i]);
      axpy(-r_inner, grads[i], params.at(i));  // transient inner adaptation
    }
  }
  params.restore(theta0);
  const double inv_k = 1.0 / static_cast<double>(hp.k);
  for (Tensor& g : meta_grad)
    for (std::size_t i = 0; i < g.size(); ++i) g.at(i) *= inv_k;
  adam.step(params, meta_grad, hp);
  return loss_sum * inv_k;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void check_params_finite(const Parameters& params) {
  for (std::size_t i = 0; i < params.count(); ++i)
    if (!params.at(i).all_finite())
      throw NumericError("parameter " + params.names()[i] + " became non-finite");
}

}  // namespace

RunReport train_adam_joint(Model& model, const Dataset& data_p,
                           const Dataset& data_e, const TrainConfig& config) {
  config.validate();
  if (data_p.split.train.empty() || data_e.split.train.empty())
    throw InvalidInput("train_adam_joint: empty training split");
  const Rng root(config.seed);
  BatchStream stream_p(data_p.split.train, config.batch_p, root.fork("batches/p"));
  BatchStream stream_e(data_e.split.train, config.batch_e, root.fork("batches/e"));
  AdamState adam(model.params);

  RunReport report;
  report.seed = config.seed;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto t0 = Clock::now();
    double sum_t = 0.0, sum_p = 0.0, sum_e = 0.0;
    std::size_t steps = 0;
    for (const Batch& be : stream_e.epoch(epoch)) {
      const Batch bp = stream_p.next_cycled();
      StepResult res = joint_step_gradients(model, bp, be);
      adam.step(model.params, res.grads, config);
      sum_t += res.loss.total;
      sum_p += res.loss.personality;
      sum_e += res.loss.emotion;
      ++steps;
    }
    check_params_finite(model.params);
    EpochRow row;
    row.epoch = epoch;
    row.loss_total = sum_t / static_cast<double>(steps);
    row.loss_p = sum_p / static_cast<double>(steps);
    row.loss_e = sum_e / static_cast<double>(steps);
    const EvalResult ev = evaluate(model, data_p, data_e, config.seed);
    row.p_metrics = ev.p_metrics;
    row.e_accuracy = ev.e_accuracy;
    row.seconds = seconds_since(t0);
    report.rows.push_back(std::move(row));
  }
  return report;
}

RunReport train_maml_like(Model& model, const Dataset& data_p,
                          const Dataset& data_e, const TrainConfig& config) {
  config.validate();
  if (data_p.split.train.empty() || data_e.split.train.empty())
    throw InvalidInput("train_maml_like: empty training split");
  const Rng root(config.seed);
  BatchStream stream_p(data_p.split.train, config.batch_p, root.fork("batches/p"));
  BatchStream stream_e(data_e.split.train, config.batch_e, root.fork("batches/e"));
  AdamState adam(model.params);

  RunReport report;
  report.seed = config.seed;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto t0 = Clock::now();
    double sum_t = 0.0, sum_p = 0.0, sum_e = 0.0;
    std::size_t outer = 0;
    for (const Batch& be : stream_e.epoch(epoch)) {
      double part_p = 0.0, part_e = 0.0;
      const double mean_loss = maml_outer_step(
          model.params, adam, config,
          [&](std::size_t) -> std::pair<double, std::vector<Tensor>> {
            const Batch bp = stream_p.sample();
            StepResult res = joint_step_gradients(model, bp, be);
            part_p += res.loss.personality;
            part_e += res.loss.emotion;
            return {res.loss.total, std::move(res.grads)};
          });
      sum_t += mean_loss;
      sum_p += part_p / static_cast<double>(config.k);
      sum_e += part_e / static_cast<double>(config.k);
      ++outer;
    }
    check_params_finite(model.params);
    EpochRow row;
    row.epoch = epoch;
    row.loss_total = sum_t / static_cast<double>(outer);
    row.loss_p = sum_p / static_cast<double>(outer);
    row.loss_e = sum_e / static_cast<double>(outer);
    const EvalResult ev = evaluate(model, data_p, data_e, config.seed);
    row.p_metrics = ev.p_metrics;
    row.e_accuracy = ev.e_accuracy;
    row.seconds = seconds_since(t0);
    report.rows.push_back(std::move(row));
  }
  return report;
}

RunReport train_single(Model& model, const Dataset& data,
                       const std::string& task, const TrainConfig& config) {
  config.validate();
  if (task != "p" && task != "e") throw InvalidInput("task must be 'p' or 'e'");
  if (data.split.train.empty())
    throw InvalidInput("train_single: empty training split");
  const bool is_p = task == "p";
  const Rng root(config.seed);
  BatchStream stream(data.split.train, is_p ? config.batch_p : config.batch_e,
                     root.fork("batches/" + task));
  AdamState adam(model.params);
  const std::size_t wmax = model.config.max_filter_width();

  RunReport report;
  report.seed = config.seed;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto t0 = Clock::now();
    double sum = 0.0;
    std::size_t steps = 0;
    for (const Batch& b : stream.epoch(epoch)) {
      const auto toks = padded_tokens(b, wmax);
      Tape tape;
      ModelGraph graph(tape, model);
      std::vector<NodeId> losses;
      losses.reserve(b.size());
      for (std::size_t i = 0; i < b.size(); ++i) {
        const NodeId logits = graph.tower(task, toks[i]);
        if (is_p)
          losses.push_back(
              multilabel_soft_margin(tape, logits, b.items[i]->label.bits));
        else
          losses.push_back(cross_entropy(tape, logits, b.items[i]->label.index));
      }
      const NodeId loss =
          tape.scale(tape.sum(losses), 1.0 / static_cast<double>(b.size()));
      guard_finite(tape.value(loss).at(0));
      tape.backward(loss);
      adam.step(model.params, graph.grads(), config);
      sum += tape.value(loss).at(0);
      ++steps;
    }
    check_params_finite(model.params);

    // Score the trained task from its own tower over its own test split.
    std::vector<std::vector<int>> mp, mg;
    std::vector<std::size_t> cp, cg;
    for (const Example& ex : data.split.test) {
      Batch one;
      one.items.push_back(&ex);
      const auto toks = padded_tokens(one, wmax);
      const TowerState st = tower_forward(model, task, toks[0]);
      if (is_p) {
        mp.push_back(decode_multilabel(st.logits));
        mg.push_back(ex.label.bits);
      } else {
        cp.push_back(decode_argmax(st.logits));
        cg.push_back(ex.label.index);
      }
    }
    EpochRow row;
    row.epoch = epoch;
    if (is_p) {
      row.loss_p = sum / static_cast<double>(steps);
      row.p_metrics = metrics_multilabel(mp, mg);
    } else {
      row.loss_e = sum / static_cast<double>(steps);
      row.e_accuracy = accuracy_multiclass(cp, cg);
    }
    row.loss_total = sum / static_cast<double>(steps);
    row.seconds = seconds_since(t0);
    report.rows.push_back(std::move(row));
  }
  return report;
}

EvalResult evaluate(const Model& model, const Dataset& data_p,
                    const Dataset& data_e, std::uint64_t seed) {
  if (data_p.split.test.empty() || data_e.split.test.empty())
    throw InvalidInput("evaluate: empty test split");
  const Rng root(seed);
  std::vector<std::size_t> order_p(data_p.split.test.size());
  std::vector<std::size_t> order_e(data_e.split.test.size());
  std::iota(order_p.begin(), order_p.end(), 0);
  std::iota(order_e.begin(), order_e.end(), 0);
  Rng rp = root.fork("eval/p");
  Rng re = root.fork("eval/e");
  rp.shuffle(order_p);
  re.shuffle(order_e);
  const std::size_t n = std::min(order_p.size(), order_e.size());

  std::vector<std::vector<int>> ml_pred, ml_gold;
  std::vector<std::size_t> mc_pred, mc_gold;
  ml_pred.reserve(n);
  mc_pred.reserve(n);

  constexpr std::size_t kEvalBatch = 32;
  for (std::size_t start = 0; start < n; start += kEvalBatch) {
    const std::size_t end = std::min(n, start + kEvalBatch);
    Batch bp, be;
    for (std::size_t i = start; i < end; ++i) {
      bp.items.push_back(&data_p.split.test[order_p[i]]);
      be.items.push_back(&data_e.split.test[order_e[i]]);
    }
    PaddedPair toks = pad_pair(model, bp, be);
    Tape tape;
    ModelGraph graph(tape, model);
    for (std::size_t i = 0; i < bp.size(); ++i) {
      auto [lp, le] = graph.pair(toks.p[i], toks.e[i]);
      ml_pred.push_back(decode_multilabel(tape.value(lp)));
      ml_gold.push_back(bp.items[i]->label.bits);
      mc_pred.push_back(decode_argmax(tape.value(le)));
      mc_gold.push_back(be.items[i]->label.index);
    }
  }
  EvalResult out;
  out.p_metrics = metrics_multilabel(ml_pred, ml_gold);
  out.e_accuracy = accuracy_multiclass(mc_pred, mc_gold);
  out.pairs = n;
  return out;
}

namespace {
std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}
}  // namespace

std::string run_report_csv(const RunReport& report) {
  std::ostringstream os;
  os << "epoch,loss_total,loss_p,loss_e," << metrics_csv_header() << "\n";
  for (const EpochRow& r : report.rows)
    os << r.epoch << ',' << fmt(r.loss_total) << ',' << fmt(r.loss_p) << ','
       << fmt(r.loss_e) << ',' << metrics_csv_row(r.p_metrics, r.e_accuracy)
       << "\n";
  return os.str();
}

std::string run_report_summary(const RunReport& report) {
  std::ostringstream os;
  os << "seed=" << report.seed << "\n"
     << "epochs=" << report.rows.size() << "\n";
  double total = 0.0;
  for (const EpochRow& r : report.rows) {
    os << "epoch_" << r.epoch << "_seconds=" << fmt(r.seconds) << "\n";
    total += r.seconds;
  }
  os << "total_seconds=" << fmt(total) << "\n";
  if (!report.rows.empty()) {
    const EpochRow& last = report.rows.back();
    os << "final_loss_total=" << fmt(last.loss_total) << "\n"
       << "final_loss_p=" << fmt(last.loss_p) << "\n"
       << "final_loss_e=" << fmt(last.loss_e) << "\n"
       << metrics_kv(last.p_metrics, last.e_accuracy);
  }
  return os.str();
}

}  // namespace gmtl
