#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gmtl/data.hpp"
#include "gmtl/model.hpp"
#include "gmtl/objectives.hpp"

namespace gmtl {

enum class Optimizer { Adam, MamlLike };

Optimizer optimizer_from_name(std::string_view name);
std::string_view optimizer_name(Optimizer o);

struct TrainConfig {
  Optimizer optimizer = Optimizer::Adam;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t k = 3;        // pseudo-shot batches per outer step
  double inner_lr = -1.0;   // negative: reuse lr for the inner SGD steps
  std::size_t epochs = 10;
  std::size_t batch_p = 16;
  std::size_t batch_e = 16;
  std::uint64_t seed = 0;

  double effective_inner_lr() const { return inner_lr < 0.0 ? lr : inner_lr; }
  void validate() const;
};

struct EpochRow {
  std::size_t epoch = 0;
  double loss_total = 0.0;
  double loss_p = 0.0;
  double loss_e = 0.0;
  MultilabelMetrics p_metrics;
  double e_accuracy = 0.0;
  double seconds = 0.0;  // wall clock, reported outside the deterministic CSV
};

struct RunReport {
  std::vector<EpochRow> rows;
  std::uint64_t seed = 0;
};

/// One standard Adam update with bias correction; t is the 1-based step
/// count after this update. m and v must have the parameter's shape.
void adam_step(Tensor& param, const Tensor& grad, Tensor& m, Tensor& v,
               std::size_t t, double lr, double beta1, double beta2,
               double eps);

/// Moment state for a whole parameter set, stepped in registry order.
class AdamState {
 public:
  explicit AdamState(const Parameters& params);
  void step(Parameters& params, const std::vector<Tensor>& grads,
            const TrainConfig& hp);
  std::size_t steps() const { return t_; }

 private:
  std::vector<Tensor> m_, v_;
  std::size_t t_ = 0;
};

/// Joint loss and gradients over a paired batch. The pair list is the
/// positional zip of the two batches truncated to the shorter one; both
/// sides are padded to a common length when the conv level is gated,
/// otherwise per task.
struct StepResult {
  JointLossValue loss;
  std::vector<Tensor> grads;  // aligned with model.params order
  std::size_t pairs = 0;
};
StepResult joint_step_gradients(const Model& model, const Batch& batch_p,
                                const Batch& batch_e);

/// One outer iteration of the pseudo-k-shot schedule: k plain SGD steps
/// from the incoming parameters, each gradient also accumulated; then the
/// parameters are restored and a single Adam step applies the averaged
/// gradient at the pre-adaptation point. grad_eval(j) must return the
/// gradients at the CURRENT parameter values for inner batch j, aligned
/// with the params order. Returns the mean inner loss.
double maml_outer_step(
    Parameters& params, AdamState& adam, const TrainConfig& hp,
    const std::function<std::pair<double, std::vector<Tensor>>(std::size_t)>&
        grad_eval);

RunReport train_adam_joint(Model& model, const Dataset& data_p,
                           const Dataset& data_e, const TrainConfig& config);

RunReport train_maml_like(Model& model, const Dataset& data_p,
                          const Dataset& data_e, const TrainConfig& config);

/// Trains one tower ("p" or "e") on its own dataset with Adam. Batch order
/// and parameter init replay exactly the corresponding streams of a joint
/// run with the same seed.
RunReport train_single(Model& model, const Dataset& data,
                       const std::string& task, const TrainConfig& config);

struct EvalResult {
  MultilabelMetrics p_metrics;
  double e_accuracy = 0.0;
  std::size_t pairs = 0;
};

/// Pairs the two test splits by seeded alignment (gates need paired inputs
/// at test time), truncates to the shorter side and scores each task from
/// its own tower's decoded outputs.
EvalResult evaluate(const Model& model, const Dataset& data_p,
                    const Dataset& data_e, std::uint64_t seed);

/// Deterministic per-epoch CSV (no wall-time columns, see the summary for
/// those): epoch,loss_total,loss_p,loss_e,<metric columns>.
std::string run_report_csv(const RunReport& report);

/// Key/value summary including per-epoch and total wall time.
std::string run_report_summary(const RunReport& report);

}  // namespace gmtl
