#include "gmtl/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <sstream>
#include <thread>

namespace gmtl {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

double cosine(const Tensor& a, const Tensor& b, bool* zero_norm) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a.at(i) * b.at(i);
    na += a.at(i) * a.at(i);
    nb += b.at(i) * b.at(i);
  }
  if (na == 0.0 || nb == 0.0) {
    *zero_norm = true;
    return 0.0;
  }
  *zero_norm = false;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

struct MeanStd {
  double mean = 0.0, std = 0.0;
};

MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd r;
  if (xs.empty()) return r;
  r.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double s = 0.0;
    for (double x : xs) s += (x - r.mean) * (x - r.mean);
    r.std = std::sqrt(s / static_cast<double>(xs.size() - 1));
  }
  return r;
}

// Runs `tasks` indexed jobs over up to `jobs` threads; results land in
// caller-provided slots, so output order never depends on scheduling.
void run_parallel(std::size_t tasks, std::size_t jobs,
                  const std::function<void(std::size_t)>& fn) {
  if (jobs <= 1 || tasks <= 1) {
    for (std::size_t i = 0; i < tasks; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  const std::size_t n_threads = std::min(jobs, tasks);
  pool.reserve(n_threads);
  for (std::size_t t = 0; t < n_threads; ++t)
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= tasks) return;
        fn(i);
      }
    });
  for (std::thread& th : pool) th.join();
}

}  // namespace

ProbeReport cosine_probe(const Model& model, const Dataset& data_p,
                         const Dataset& data_e, std::uint64_t seed,
                         ActivationDump* dump) {
  if (data_p.split.test.empty() || data_e.split.test.empty())
    throw InvalidInput("cosine_probe: empty test split");
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
  const std::size_t wmax = model.config.max_filter_width();

  double sum1 = 0.0, sum2 = 0.0;
  std::size_t used1 = 0, used2 = 0, skipped = 0;
  for (std::size_t i = 0; i < n; ++i) {
    Batch bp, be;
    bp.items.push_back(&data_p.split.test[order_p[i]]);
    be.items.push_back(&data_e.split.test[order_e[i]]);
    std::size_t longest = wmax;
    if (model.config.gated_at(Level::Conv)) {
      longest = std::max({wmax, bp.items[0]->tokens.size(), be.items[0]->tokens.size()});
    }
    const auto tp = padded_tokens(bp, model.config.gated_at(Level::Conv)
                                          ? longest
                                          : wmax);
    const auto te = padded_tokens(be, model.config.gated_at(Level::Conv)
                                          ? longest
                                          : wmax);
    const auto [sp, se] = mtl_forward(model, tp[0], te[0]);

    const Tensor cp = sp.conv_concat();
    const Tensor ce = se.conv_concat();
    bool zero = false;
    if (cp.size() == ce.size()) {
      const double c1 = cosine(cp, ce, &zero);
      if (zero) {
        ++skipped;
      } else {
        sum1 += c1;
        ++used1;
      }
    } else {
      ++skipped;  // unequal lengths cannot happen with common padding
    }
    const double c2 = cosine(sp.dense_hidden, se.dense_hidden, &zero);
    if (zero) {
      ++skipped;
    } else {
      sum2 += c2;
      ++used2;
    }
    if (dump) {
      dump->conv_p.push_back(cp);
      dump->conv_e.push_back(ce);
      dump->dense_p.push_back(sp.dense_hidden);
      dump->dense_e.push_back(se.dense_hidden);
    }
  }
  if (used1 == 0 && used2 == 0)
    throw DataError("cosine_probe: no valid pairs");
  ProbeReport rep;
  rep.sim1 = used1 ? sum1 / static_cast<double>(used1) : 0.0;
  rep.sim2 = used2 ? sum2 / static_cast<double>(used2) : 0.0;
  rep.pairs = n;
  rep.skipped_zero_norm = skipped;
  std::ostringstream echo;
  echo << "gate=" << gate_name(model.config.gate) << " placement=";
  for (Level l : {Level::Conv, Level::Pool, Level::Dense})
    if (model.config.gated_at(l)) echo << level_name(l) << ";";
  echo << " latent=per-example-then-mean";
  rep.config_echo = echo.str();
  return rep;
}

std::string probe_kv(const ProbeReport& r) {
  std::ostringstream os;
  os << "sim1=" << fmt(r.sim1) << "\n"
     << "sim2=" << fmt(r.sim2) << "\n"
     << "pairs=" << r.pairs << "\n"
     << "skipped_zero_norm=" << r.skipped_zero_norm << "\n"
     << "config=" << r.config_echo << "\n";
  return os.str();
}

TimingReport time_gates(const ModelConfig& base_config,
                        const TrainConfig& train_config,
                        const Dataset& data_p, const Dataset& data_e,
                        const std::vector<GateKind>& gates,
                        std::size_t epochs) {
  if (epochs == 0) throw InvalidInput("time_gates: epochs must be >= 1");
  TimingReport rep;
  rep.epochs = epochs;
  rep.hardware_note = "single-threaded, steady_clock, mean over " +
                      std::to_string(epochs) + " epochs";
  for (GateKind g : gates) {
    ModelConfig mc = base_config;
    mc.gate = g;
    if (g == GateKind::None) mc.placement.clear();
    else if (mc.placement.empty())
      mc.placement = {Level::Conv, Level::Pool, Level::Dense};
    TrainConfig tc = train_config;
    tc.epochs = epochs;
    Model model = init_model(mc, tc.seed);
    const RunReport run = tc.optimizer == Optimizer::Adam
                              ? train_adam_joint(model, data_p, data_e, tc)
                              : train_maml_like(model, data_p, data_e, tc);
    double total = 0.0;
    for (const EpochRow& r : run.rows) total += r.seconds;
    rep.gates.push_back(g);
    rep.seconds_per_epoch.push_back(total / static_cast<double>(run.rows.size()));
  }
  return rep;
}

std::string timing_csv(const TimingReport& r) {
  std::ostringstream os;
  os << "gate,seconds_per_epoch\n";
  for (std::size_t i = 0; i < r.gates.size(); ++i)
    os << gate_name(r.gates[i]) << ',' << fmt(r.seconds_per_epoch[i]) << "\n";
  return os.str();
}

std::string timing_kv(const TimingReport& r) {
  std::ostringstream os;
  for (std::size_t i = 0; i < r.gates.size(); ++i)
    os << "seconds_per_epoch_" << gate_name(r.gates[i]) << '='
       << fmt(r.seconds_per_epoch[i]) << "\n";
  os << "epochs=" << r.epochs << "\n"
     << "hardware_note=" << r.hardware_note << "\n";
  return os.str();
}

GridResult comparison_grid(const ModelConfig& base_config,
                           const TrainConfig& base_train,
                           const Dataset& data_p, const Dataset& data_e,
                           const std::vector<GateKind>& gates,
                           const std::vector<Optimizer>& optimizers,
                           const std::vector<std::uint64_t>& seeds,
                           std::size_t jobs) {
  if (seeds.empty()) throw InvalidInput("comparison_grid: no seeds");
  struct Cell {
    GateKind gate;
    Optimizer opt;
  };
  std::vector<Cell> cells;
  for (GateKind g : gates)
    for (Optimizer o : optimizers) cells.push_back({g, o});

  struct RunOut {
    MultilabelMetrics p;
    double e_acc = 0.0;
  };
  std::vector<std::vector<RunOut>> results(cells.size(),
                                           std::vector<RunOut>(seeds.size()));

  run_parallel(cells.size() * seeds.size(), jobs, [&](std::size_t flat) {
    const std::size_t ci = flat / seeds.size();
    const std::size_t si = flat % seeds.size();
    ModelConfig mc = base_config;
    mc.gate = cells[ci].gate;
    if (mc.gate == GateKind::None) mc.placement.clear();
    else if (mc.placement.empty())
      mc.placement = {Level::Conv, Level::Pool, Level::Dense};
    TrainConfig tc = base_train;
    tc.optimizer = cells[ci].opt;
    tc.seed = seeds[si];
    Model model = init_model(mc, tc.seed);
    const RunReport run = tc.optimizer == Optimizer::Adam
                              ? train_adam_joint(model, data_p, data_e, tc)
                              : train_maml_like(model, data_p, data_e, tc);
    const EpochRow& last = run.rows.back();
    results[ci][si] = {last.p_metrics, last.e_accuracy};
  });

  GridResult out;
  out.seeds = seeds;
  for (std::size_t ci = 0; ci < cells.size(); ++ci) {
    GridCell cell;
    cell.gate = cells[ci].gate;
    cell.optimizer = cells[ci].opt;
    std::vector<double> acc, prec, rec, f1, avg, eacc;
    for (const RunOut& r : results[ci]) {
      acc.push_back(r.p.accuracy);
      prec.push_back(r.p.precision);
      rec.push_back(r.p.recall);
      f1.push_back(r.p.f1);
      avg.push_back(r.p.average());
      eacc.push_back(r.e_acc);
    }
    const auto fill = [](const std::vector<double>& xs, double& m, double& s) {
      const MeanStd ms = mean_std(xs);
      m = ms.mean;
      s = ms.std;
    };
    fill(acc, cell.acc_mean, cell.acc_std);
    fill(prec, cell.prec_mean, cell.prec_std);
    fill(rec, cell.rec_mean, cell.rec_std);
    fill(f1, cell.f1_mean, cell.f1_std);
    fill(avg, cell.avg_mean, cell.avg_std);
    fill(eacc, cell.e_acc_mean, cell.e_acc_std);
    cell.f1_per_seed = f1;
    out.cells.push_back(std::move(cell));
  }
  return out;
}

std::string grid_csv(const GridResult& g) {
  std::ostringstream os;
  os << "gate,optimizer,p_accuracy_mean,p_accuracy_std,p_precision_mean,"
        "p_precision_std,p_recall_mean,p_recall_std,p_f1_mean,p_f1_std,"
        "p_average_mean,p_average_std,e_accuracy_mean,e_accuracy_std\n";
  for (const GridCell& c : g.cells)
    os << gate_name(c.gate) << ',' << optimizer_name(c.optimizer) << ','
       << fmt(c.acc_mean) << ',' << fmt(c.acc_std) << ',' << fmt(c.prec_mean)
       << ',' << fmt(c.prec_std) << ',' << fmt(c.rec_mean) << ','
       << fmt(c.rec_std) << ',' << fmt(c.f1_mean) << ',' << fmt(c.f1_std)
       << ',' << fmt(c.avg_mean) << ',' << fmt(c.avg_std) << ','
       << fmt(c.e_acc_mean) << ',' << fmt(c.e_acc_std) << "\n";
  return os.str();
}

AblationResult placement_ablation(const ModelConfig& base_config,
                                  const TrainConfig& base_train,
                                  const Dataset& data_p, const Dataset& data_e,
                                  const std::vector<std::uint64_t>& seeds,
                                  std::size_t jobs) {
  if (seeds.empty()) throw InvalidInput("placement_ablation: no seeds");
  struct Variant {
    std::string name;
    std::vector<Level> placement;
  };
  const std::vector<Variant> variants = {
      {"dense", {Level::Dense}},
      {"pool", {Level::Pool}},
      {"conv", {Level::Conv}},
      {"all", {Level::Conv, Level::Pool, Level::Dense}},
  };

  struct RunOut {
    MultilabelMetrics p;
    double e_acc = 0.0;
    double sim1 = 0.0, sim2 = 0.0;
  };
  std::vector<std::vector<RunOut>> results(variants.size(),
                                           std::vector<RunOut>(seeds.size()));

  run_parallel(variants.size() * seeds.size(), jobs, [&](std::size_t flat) {
    const std::size_t vi = flat / seeds.size();
    const std::size_t si = flat % seeds.size();
    ModelConfig mc = base_config;
    mc.gate = GateKind::SoG;
    mc.placement = variants[vi].placement;
    TrainConfig tc = base_train;
    tc.seed = seeds[si];
    Model model = init_model(mc, tc.seed);
    const RunReport run = tc.optimizer == Optimizer::Adam
                              ? train_adam_joint(model, data_p, data_e, tc)
                              : train_maml_like(model, data_p, data_e, tc);
    const ProbeReport probe = cosine_probe(model, data_p, data_e, tc.seed);
    const EpochRow& last = run.rows.back();
    results[vi][si] = {last.p_metrics, last.e_accuracy, probe.sim1, probe.sim2};
  });

  AblationResult out;
  out.seeds = seeds;
  std::vector<AblationRow> rows;
  for (std::size_t vi = 0; vi < variants.size(); ++vi) {
    AblationRow row;
    row.variant = variants[vi].name;
    std::vector<double> acc, prec, rec, f1, avg, eacc, s1, s2;
    for (const RunOut& r : results[vi]) {
      acc.push_back(r.p.accuracy);
      prec.push_back(r.p.precision);
      rec.push_back(r.p.recall);
      f1.push_back(r.p.f1);
      avg.push_back(r.p.average());
      eacc.push_back(r.e_acc);
      s1.push_back(r.sim1);
      s2.push_back(r.sim2);
    }
    row.acc = mean_std(acc).mean;
    row.prec = mean_std(prec).mean;
    row.rec = mean_std(rec).mean;
    row.f1 = mean_std(f1).mean;
    row.avg = mean_std(avg).mean;
    row.e_acc = mean_std(eacc).mean;
    row.sim1 = mean_std(s1).mean;
    row.sim2 = mean_std(s2).mean;
    rows.push_back(std::move(row));
  }
  const AblationRow& ref = rows.back();  // "all"
  for (AblationRow& r : rows) {
    r.delta_sim1 = r.sim1 - ref.sim1;
    r.delta_sim2 = r.sim2 - ref.sim2;
  }
  out.rows = std::move(rows);
  return out;
}

std::string ablation_csv(const AblationResult& a) {
  std::ostringstream os;
  os << "variant,p_accuracy,p_precision,p_recall,p_f1,p_average,e_accuracy,"
        "sim1,delta_sim1,sim2,delta_sim2\n";
  for (const AblationRow& r : a.rows)
    os << r.variant << ',' << fmt(r.acc) << ',' << fmt(r.prec) << ','
       << fmt(r.rec) << ',' << fmt(r.f1) << ',' << fmt(r.avg) << ','
       << fmt(r.e_acc) << ',' << fmt(r.sim1) << ',' << fmt(r.delta_sim1)
       << ',' << fmt(r.sim2) << ',' << fmt(r.delta_sim2) << "\n";
  return os.str();
}

}  // namespace gmtl
