#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gmtl/trainer.hpp"

namespace gmtl {

/// Mean cross-task cosine similarity of post-gate hidden vectors over the
/// paired test sets: sim1 at the conv tap (all feature maps concatenated),
/// sim2 at the dense tap. Pairs where either side has zero norm are
/// skipped and counted.
struct ProbeReport {
  double sim1 = 0.0;
  double sim2 = 0.0;
  std::size_t pairs = 0;
  std::size_t skipped_zero_norm = 0;
  std::string config_echo;
};

/// Paired per-example activations, exposed so the probe can be checked
/// against an independent cosine computation.
struct ActivationDump {
  std::vector<Tensor> conv_p, conv_e;    // flattened conv-level hiddens
  std::vector<Tensor> dense_p, dense_e;  // dense-level hiddens
};

ProbeReport cosine_probe(const Model& model, const Dataset& data_p,
                         const Dataset& data_e, std::uint64_t seed,
                         ActivationDump* dump = nullptr);

std::string probe_kv(const ProbeReport& r);

struct TimingReport {
  std::vector<GateKind> gates;
  std::vector<double> seconds_per_epoch;  // mean over timed epochs
  std::size_t epochs = 0;
  std::string hardware_note;
};

/// Trains one model per gate kind on identical data and seed, recording
/// mean wall-clock seconds per epoch.
TimingReport time_gates(const ModelConfig& base_config,
                        const TrainConfig& train_config,
                        const Dataset& data_p, const Dataset& data_e,
                        const std::vector<GateKind>& gates,
                        std::size_t epochs);

std::string timing_csv(const TimingReport& r);
std::string timing_kv(const TimingReport& r);

/// One grid cell: a (gate, optimizer) configuration trained once per seed.
struct GridCell {
  GateKind gate = GateKind::None;
  Optimizer optimizer = Optimizer::Adam;
  // Mean and sample standard deviation over seeds of the final-epoch
  // metrics; `average` is the mean of Acc/P/R/F1 per run, then averaged.
  double acc_mean = 0, acc_std = 0;
  double prec_mean = 0, prec_std = 0;
  double rec_mean = 0, rec_std = 0;
  double f1_mean = 0, f1_std = 0;
  double avg_mean = 0, avg_std = 0;
  double e_acc_mean = 0, e_acc_std = 0;
  std::vector<double> f1_per_seed;  // personality micro-F1, seed order
};

struct GridResult {
  std::vector<GridCell> cells;
  std::vector<std::uint64_t> seeds;
};

/// Full comparison grid; cells run independently (optionally in `jobs`
/// worker threads) and are reported in the given gate x optimizer order.
/// The (None, Adam) cell trains the towers without any coupling, i.e. the
/// single-task baseline pair.
GridResult comparison_grid(const ModelConfig& base_config,
                           const TrainConfig& base_train,
                           const Dataset& data_p, const Dataset& data_e,
                           const std::vector<GateKind>& gates,
                           const std::vector<Optimizer>& optimizers,
                           const std::vector<std::uint64_t>& seeds,
                           std::size_t jobs = 1);

std::string grid_csv(const GridResult& g);

/// Softmax-weighted gate placed at a single level (plus the all-levels
/// reference), with metrics and the cosine probes' deltas against the
/// reference, Sim-table style.
struct AblationRow {
  std::string variant;  // "conv", "pool", "dense", "all"
  double acc = 0, prec = 0, rec = 0, f1 = 0, avg = 0, e_acc = 0;
  double sim1 = 0, sim2 = 0;
  double delta_sim1 = 0, delta_sim2 = 0;
};

struct AblationResult {
  std::vector<AblationRow> rows;  // mean over seeds
  std::vector<std::uint64_t> seeds;
};

AblationResult placement_ablation(const ModelConfig& base_config,
                                  const TrainConfig& base_train,
                                  const Dataset& data_p, const Dataset& data_e,
                                  const std::vector<std::uint64_t>& seeds,
                                  std::size_t jobs = 1);

std::string ablation_csv(const AblationResult& a);

}  // namespace gmtl
