#include <cmath>
#include <vector>

#include "doctest.h"
#include "gmtl/analysis.hpp"

using namespace gmtl;

namespace {

struct DataPair {
  Dataset p, e;
};

DataPair probe_data(std::size_t n, std::uint64_t seed) {
  SynthConfig sc;
  sc.n_per_task = n;
  sc.vocab_size = 150;
  sc.rho = 0.8;
  sc.seed = seed;
  const SynthPair pair = synth_paired_tasks(sc);
  DataPair d;
  d.p = build_dataset(pair.personality, pair.personality_schema, seed);
  d.e = build_dataset(pair.emotion, pair.emotion_schema, seed);
  return d;
}

ModelConfig probe_config(GateKind gate, const DataPair& d) {
  ModelConfig c;
  c.embedding_dim = 8;
  c.filter_widths = {2, 3};
  c.filters_per_width = 4;
  c.dense_hidden = 6;
  c.personality_classes = 5;
  c.emotion_classes = 6;
  c.gate = gate;
  if (gate == GateKind::None) c.placement.clear();
  c.activation = Activation::Tanh;
  c.personality_vocab = d.p.vocab.size();
  c.emotion_vocab = d.e.vocab.size();
  return c;
}

double cosine_oracle(const Tensor& a, const Tensor& b) {
  long double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += (long double)a.at(i) * b.at(i);
    na += (long double)a.at(i) * a.at(i);
    nb += (long double)b.at(i) * b.at(i);
  }
  return static_cast<double>(dot / (std::sqrt(na) * std::sqrt(nb)));
}

}  // namespace

TEST_CASE("probe equals an independent cosine oracle over dumped activations") {
  const DataPair d = probe_data(50, 211);
  const Model m = init_model(probe_config(GateKind::SoG, d), 211);
  ActivationDump dump;
  const ProbeReport rep = cosine_probe(m, d.p, d.e, 211, &dump);

  REQUIRE(dump.conv_p.size() == rep.pairs);
  long double s1 = 0, s2 = 0;
  for (std::size_t i = 0; i < dump.conv_p.size(); ++i) {
    s1 += cosine_oracle(dump.conv_p[i], dump.conv_e[i]);
    s2 += cosine_oracle(dump.dense_p[i], dump.dense_e[i]);
  }
  CHECK(std::fabs(rep.sim1 - static_cast<double>(s1 / dump.conv_p.size())) < 1e-10);
  CHECK(std::fabs(rep.sim2 - static_cast<double>(s2 / dump.dense_p.size())) < 1e-10);
  CHECK(rep.sim1 >= -1.0);
  CHECK(rep.sim1 <= 1.0);
  CHECK(rep.sim2 >= -1.0);
  CHECK(rep.sim2 <= 1.0);
}

TEST_CASE("cloned towers give similarity one at both levels") {
  // same head widths, parameters of tower p copied into tower e, identical
  // inputs on both sides: the hidden vectors coincide exactly
  DataPair d = probe_data(30, 223);
  d.e = d.p;  // identical test split on both sides
  ModelConfig c = probe_config(GateKind::None, d);
  c.emotion_classes = c.personality_classes;
  c.emotion_vocab = c.personality_vocab;
  Model m = init_model(c, 223);
  for (const std::string& name : m.params.names())
    if (name[0] == 'p')
      m.params.get("e" + name.substr(1)) = m.params.get(name);
  // align the pairing streams so example i meets itself
  // (identical datasets + identical eval permutation seeds do this when the
  //  two shuffles agree, so instead pair explicitly through a probe dump)
  ActivationDump dump;
  cosine_probe(m, d.p, d.e, 223, &dump);
  // towers are clones, so equal INPUTS give equal activations; verify on
  // the self-paired subset by recomputing tower-side activations directly
  const TowerState sp = tower_forward(m, "p", {2, 3, 4});
  const TowerState se = tower_forward(m, "e", {2, 3, 4});
  CHECK(cosine_oracle(sp.conv_concat(), se.conv_concat()) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cosine_oracle(sp.dense_hidden, se.dense_hidden) ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("orthogonal activations give similarity zero") {
  CHECK(cosine_oracle(Tensor::row({1, 0}), Tensor::row({0, 1})) == 0.0);
}

TEST_CASE("probe does not mutate the model") {
  const DataPair d = probe_data(40, 227);
  const Model m = init_model(probe_config(GateKind::CAG, d), 227);
  const std::uint64_t before = m.params.digest();
  cosine_probe(m, d.p, d.e, 227);
  CHECK(m.params.digest() == before);
}

TEST_CASE("probe report serializes") {
  const DataPair d = probe_data(30, 229);
  const Model m = init_model(probe_config(GateKind::SoG, d), 229);
  const ProbeReport rep = cosine_probe(m, d.p, d.e, 229);
  const std::string kv = probe_kv(rep);
  CHECK(kv.find("sim1=") != std::string::npos);
  CHECK(kv.find("sim2=") != std::string::npos);
  CHECK(kv.find("config=gate=sog") != std::string::npos);
}

TEST_CASE("timing covers each gate and stays positive") {
  const DataPair d = probe_data(64, 233);
  TrainConfig tc;
  tc.lr = 0.01;
  tc.batch_p = 16;
  tc.batch_e = 16;
  tc.seed = 233;
  const TimingReport rep =
      time_gates(probe_config(GateKind::None, d), tc, d.p, d.e,
                 {GateKind::None, GateKind::SoG, GateKind::CAG}, 2);
  REQUIRE(rep.gates.size() == 3);
  for (double s : rep.seconds_per_epoch) CHECK(s > 0.0);
  const std::string csv = timing_csv(rep);
  CHECK(csv.find("sog") != std::string::npos);
  CHECK(csv.find("cag") != std::string::npos);
  CHECK(timing_kv(rep).find("seconds_per_epoch_none=") != std::string::npos);
}

TEST_CASE("one-cell grid with one seed reduces to a single training run") {
  const DataPair d = probe_data(60, 239);
  const ModelConfig mc = probe_config(GateKind::SoG, d);
  TrainConfig tc;
  tc.lr = 0.01;
  tc.epochs = 2;
  tc.batch_p = 10;
  tc.batch_e = 10;
  const GridResult g = comparison_grid(mc, tc, d.p, d.e, {GateKind::SoG},
                                       {Optimizer::Adam}, {239});
  REQUIRE(g.cells.size() == 1);

  ModelConfig mc2 = mc;
  TrainConfig tc2 = tc;
  tc2.seed = 239;
  Model m = init_model(mc2, 239);
  const RunReport rep = train_adam_joint(m, d.p, d.e, tc2);
  const EpochRow& last = rep.rows.back();
  CHECK(g.cells[0].f1_mean == last.p_metrics.f1);
  CHECK(g.cells[0].acc_mean == last.p_metrics.accuracy);
  CHECK(g.cells[0].e_acc_mean == last.e_accuracy);
  CHECK(g.cells[0].acc_std == 0.0);
}

TEST_CASE("duplicate seeds give zero spread") {
  const DataPair d = probe_data(50, 241);
  const ModelConfig mc = probe_config(GateKind::SiG, d);
  TrainConfig tc;
  tc.lr = 0.01;
  tc.epochs = 2;
  tc.batch_p = 10;
  tc.batch_e = 10;
  const GridResult g = comparison_grid(mc, tc, d.p, d.e, {GateKind::SiG},
                                       {Optimizer::Adam}, {241, 241});
  CHECK(g.cells[0].f1_std == 0.0);
  CHECK(g.cells[0].acc_std == 0.0);
}

TEST_CASE("grid determinism across jobs settings") {
  const DataPair d = probe_data(48, 251);
  const ModelConfig mc = probe_config(GateKind::SoG, d);
  TrainConfig tc;
  tc.lr = 0.01;
  tc.epochs = 2;
  tc.batch_p = 12;
  tc.batch_e = 12;
  const std::vector<std::uint64_t> seeds{1, 2};
  const GridResult serial =
      comparison_grid(mc, tc, d.p, d.e, {GateKind::None, GateKind::SoG},
                      {Optimizer::Adam, Optimizer::MamlLike}, seeds, 1);
  const GridResult parallel =
      comparison_grid(mc, tc, d.p, d.e, {GateKind::None, GateKind::SoG},
                      {Optimizer::Adam, Optimizer::MamlLike}, seeds, 4);
  CHECK(grid_csv(serial) == grid_csv(parallel));
}

TEST_CASE("placement ablation reports one active level per variant") {
  const DataPair d = probe_data(60, 257);
  ModelConfig mc = probe_config(GateKind::SoG, d);
  TrainConfig tc;
  tc.lr = 0.01;
  tc.epochs = 2;
  tc.batch_p = 12;
  tc.batch_e = 12;
  const AblationResult abl = placement_ablation(mc, tc, d.p, d.e, {257}, 2);
  REQUIRE(abl.rows.size() == 4);
  CHECK(abl.rows[0].variant == "dense");
  CHECK(abl.rows[1].variant == "pool");
  CHECK(abl.rows[2].variant == "conv");
  CHECK(abl.rows[3].variant == "all");
  // the reference row's deltas vanish by construction
  CHECK(abl.rows[3].delta_sim1 == 0.0);
  CHECK(abl.rows[3].delta_sim2 == 0.0);
  // deltas equal independent subtraction
  for (const AblationRow& r : abl.rows) {
    CHECK(r.delta_sim1 == doctest::Approx(r.sim1 - abl.rows[3].sim1).epsilon(1e-15));
    CHECK(r.delta_sim2 == doctest::Approx(r.sim2 - abl.rows[3].sim2).epsilon(1e-15));
  }
  const std::string csv = ablation_csv(abl);
  CHECK(csv.find("variant,") == 0);
  CHECK(csv.find("conv,") != std::string::npos);
}
