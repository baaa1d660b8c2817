// Command line surface for the gmtl toolkit: dataset synthesis, training,
// evaluation, comparison grids, placement ablation, probing and timing.
//
// Exit codes: 0 success, 2 usage error, 3 data/checkpoint error, 4 numeric
// failure (NaN guard).

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "gmtl/analysis.hpp"
#include "gmtl/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace gmtl;

namespace {

std::string version_string() {
#ifdef GMTL_VERSION
  return GMTL_VERSION;
#else
  return "0.0.0";
#endif
}

std::string now_iso8601() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file for digest: " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  char buf[24];
  std::snprintf(buf, sizeof buf, "fnv1a:%016llx",
                static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write output file: " + path.string());
  out << content;
  if (!out) throw DataError("short write: " + path.string());
}

// One manifest next to the outputs of every artifact-producing command.
void write_manifest(const fs::path& dir, const std::string& command,
                    std::uint64_t seed, const json& config,
                    const std::vector<std::string>& input_paths,
                    const std::vector<std::string>& output_names) {
  json m;
  m["command"] = command;
  m["version"] = version_string();
  m["seed"] = seed;
  m["config"] = config;
  json inputs = json::object();
  for (const std::string& p : input_paths) inputs[p] = file_digest(p);
  m["inputs"] = inputs;
  m["outputs"] = output_names;
  m["timestamp"] = now_iso8601();
  write_text(dir / "manifest.json", m.dump(2) + "\n");
}

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

// Label schema resolution for a dataset file: explicit --labels flag wins,
// then a synth_meta.json sidecar in the file's directory, then the
// built-in default for the task.
LabelSchema resolve_schema(const std::string& task_file, LabelKind kind,
                           const std::string& labels_flag,
                           const char* sidecar_key,
                           const LabelSchema& fallback) {
  if (!labels_flag.empty()) {
    LabelSchema s;
    s.kind = kind;
    s.labels = split_list(labels_flag);
    s.validate();
    return s;
  }
  const fs::path sidecar = fs::path(task_file).parent_path() / "synth_meta.json";
  if (fs::exists(sidecar)) {
    std::ifstream in(sidecar);
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw DataError("bad sidecar " + sidecar.string() + ": " + e.what());
    }
    if (j.contains(sidecar_key)) {
      LabelSchema s;
      s.kind = kind;
      s.labels = j.at(sidecar_key).get<std::vector<std::string>>();
      s.validate();
      return s;
    }
  }
  return fallback;
}

struct DataFlags {
  std::string task_p;
  std::string task_e;
  std::string labels_p;
  std::string labels_e;
  std::size_t min_count = 1;
};

void add_data_flags(CLI::App* cmd, DataFlags& f) {
  cmd->add_option("--task-p", f.task_p, "personality-task dataset (tsv)")
      ->required();
  cmd->add_option("--task-e", f.task_e, "emotion-task dataset (tsv)")
      ->required();
  cmd->add_option("--labels-p", f.labels_p,
                  "comma-separated personality label names (default: Big Five "
                  "or sidecar)");
  cmd->add_option("--labels-e", f.labels_e,
                  "comma-separated emotion label names (default: ISEAR set or "
                  "sidecar)");
  cmd->add_option("--min-count", f.min_count, "vocabulary frequency cutoff");
}

struct LoadedPair {
  Dataset p, e;
};

LoadedPair load_pair(const DataFlags& f, std::uint64_t seed) {
  const LabelSchema sp =
      resolve_schema(f.task_p, LabelKind::Multilabel, f.labels_p,
                     "personality_labels", LabelSchema::personality());
  const LabelSchema se = resolve_schema(f.task_e, LabelKind::Multiclass,
                                        f.labels_e, "emotion_labels",
                                        LabelSchema::isear());
  LoadedPair out;
  out.p = build_dataset(load_delimited(f.task_p, sp), sp, seed, f.min_count);
  out.e = build_dataset(load_delimited(f.task_e, se), se, seed, f.min_count);
  return out;
}

struct ModelFlags {
  std::size_t dim = 300;
  std::string widths = "3,4,5";
  std::size_t filters = 32;
  std::size_t hidden = 64;
  std::string gate = "sog";
  std::string placement = "conv,pool,dense";
  std::string activation = "relu";
  bool cag_cross_value = false;
};

void add_model_flags(CLI::App* cmd, ModelFlags& f, bool with_gate = true) {
  cmd->add_option("--dim", f.dim, "embedding dimension");
  cmd->add_option("--widths", f.widths, "filter widths, comma separated");
  cmd->add_option("--filters", f.filters, "filters per width");
  cmd->add_option("--hidden", f.hidden, "dense hidden width");
  if (with_gate) {
    cmd->add_option("--gate", f.gate, "sig|cag|silg|sog|none");
    cmd->add_option("--placement", f.placement,
                    "gate levels, comma separated from conv,pool,dense");
  }
  cmd->add_option("--activation", f.activation, "relu|tanh|identity");
  cmd->add_flag("--cag-cross-value", f.cag_cross_value,
                "CAG attends over the sending tower's values");
}

ModelConfig model_config_from_flags(const ModelFlags& f, const LoadedPair& d) {
  ModelConfig c;
  c.embedding_dim = f.dim;
  c.filter_widths.clear();
  for (const std::string& w : split_list(f.widths))
    c.filter_widths.push_back(static_cast<std::size_t>(std::stoul(w)));
  c.filters_per_width = f.filters;
  c.dense_hidden = f.hidden;
  c.gate = gate_from_name(f.gate);
  c.placement.clear();
  if (c.gate != GateKind::None)
    for (const std::string& l : split_list(f.placement))
      c.placement.push_back(level_from_name(l));
  c.activation = activation_from_name(f.activation);
  c.cag_cross_value = f.cag_cross_value;
  c.personality_classes = d.p.schema.count();
  c.emotion_classes = d.e.schema.count();
  c.personality_vocab = d.p.vocab.size();
  c.emotion_vocab = d.e.vocab.size();
  c.validate();
  return c;
}

struct TrainFlags {
  std::string opt = "adam";
  double lr = 1e-3;
  std::size_t k = 3;
  double inner_lr = -1.0;
  std::size_t epochs = 10;
  std::size_t batch = 16;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
};

void add_train_flags(CLI::App* cmd, TrainFlags& f) {
  cmd->add_option("--opt", f.opt, "adam|maml");
  cmd->add_option("--lr", f.lr, "learning rate (also the inner-loop rate)");
  cmd->add_option("--k", f.k, "pseudo-shot batches per outer step (maml)");
  cmd->add_option("--inner-lr", f.inner_lr,
                  "override the inner-loop rate (maml)");
  cmd->add_option("--epochs", f.epochs, "training epochs");
  cmd->add_option("--batch", f.batch, "batch size for both tasks");
}

TrainConfig train_config_from_flags(const TrainFlags& f, std::uint64_t seed) {
  TrainConfig c;
  c.optimizer = optimizer_from_name(f.opt);
  c.lr = f.lr;
  c.k = f.k;
  c.inner_lr = f.inner_lr;
  c.epochs = f.epochs;
  c.batch_p = f.batch;
  c.batch_e = f.batch;
  c.beta1 = f.beta1;
  c.beta2 = f.beta2;
  c.eps = f.eps;
  c.seed = seed;
  c.validate();
  return c;
}

json train_config_echo(const TrainConfig& c) {
  return json{{"optimizer", std::string(optimizer_name(c.optimizer))},
              {"lr", c.lr},
              {"k", c.k},
              {"inner_lr", c.inner_lr},
              {"epochs", c.epochs},
              {"batch_p", c.batch_p},
              {"batch_e", c.batch_e},
              {"beta1", c.beta1},
              {"beta2", c.beta2},
              {"eps", c.eps}};
}

std::size_t default_jobs() {
  if (const char* env = std::getenv("GMTL_JOBS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<std::size_t>(v);
  }
  return 1;
}

std::vector<std::uint64_t> seed_list(std::uint64_t base, std::size_t count) {
  std::vector<std::uint64_t> seeds;
  for (std::size_t i = 0; i < count; ++i) seeds.push_back(base + i);
  return seeds;
}

// ---------------------------------------------------------------------------

struct SynthFlags {
  std::size_t n = 2000;
  std::size_t vocab = 500;
  double rho = 0.8;
  std::uint64_t seed = 0;
  std::size_t min_tokens = 6;
  std::size_t max_tokens = 12;
  double marker_keep = 0.85;
  std::string out_dir;
};

int run_synth(const SynthFlags& f) {
  SynthConfig cfg;
  cfg.n_per_task = f.n;
  cfg.vocab_size = f.vocab;
  cfg.rho = f.rho;
  cfg.seed = f.seed;
  cfg.min_tokens = f.min_tokens;
  cfg.max_tokens = f.max_tokens;
  cfg.marker_keep_prob = f.marker_keep;
  const SynthPair pair = synth_paired_tasks(cfg);

  fs::create_directories(f.out_dir);
  const fs::path dir(f.out_dir);
  write_delimited((dir / "personality.tsv").string(), pair.personality,
                  pair.personality_schema);
  write_delimited((dir / "emotion.tsv").string(), pair.emotion,
                  pair.emotion_schema);

  json meta;
  meta["rho"] = cfg.rho;
  meta["seed"] = cfg.seed;
  meta["n_per_task"] = cfg.n_per_task;
  meta["vocab_size"] = cfg.vocab_size;
  meta["min_tokens"] = cfg.min_tokens;
  meta["max_tokens"] = cfg.max_tokens;
  meta["marker_keep_prob"] = cfg.marker_keep_prob;
  meta["personality_labels"] = pair.personality_schema.labels;
  meta["emotion_labels"] = pair.emotion_schema.labels;
  meta["files"] = {{"personality", "personality.tsv"}, {"emotion", "emotion.tsv"}};
  write_text(dir / "synth_meta.json", meta.dump(2) + "\n");

  write_manifest(dir, "synth", f.seed, meta, {},
                 {"personality.tsv", "emotion.tsv", "synth_meta.json"});
  std::cout << "wrote " << (dir / "personality.tsv").string() << " and "
            << (dir / "emotion.tsv").string() << " (" << f.n
            << " examples each)\n";
  return 0;
}

struct TrainCmdFlags {
  DataFlags data;
  ModelFlags model;
  TrainFlags train;
  std::uint64_t seed = 0;
  std::string out_dir;
};

int run_train(const TrainCmdFlags& f, bool k_given) {
  if (k_given && f.train.opt == "adam")
    std::cerr << "warning: --k has no effect with --opt adam; ignored\n";

  const LoadedPair d = load_pair(f.data, f.seed);
  const ModelConfig mc = model_config_from_flags(f.model, d);
  const TrainConfig tc = train_config_from_flags(f.train, f.seed);

  Model model = init_model(mc, f.seed);
  const RunReport report = tc.optimizer == Optimizer::Adam
                               ? train_adam_joint(model, d.p, d.e, tc)
                               : train_maml_like(model, d.p, d.e, tc);

  fs::create_directories(f.out_dir);
  const fs::path dir(f.out_dir);

  Checkpoint ckpt;
  ckpt.model = std::move(model);
  ckpt.vocab_p = d.p.vocab.tokens();
  ckpt.vocab_e = d.e.vocab.tokens();
  ckpt.schema_p = d.p.schema;
  ckpt.schema_e = d.e.schema;
  ckpt.seed = f.seed;
  save_checkpoint((dir / "checkpoint.bin").string(), ckpt);

  write_text(dir / "report.csv", run_report_csv(report));
  write_text(dir / "summary.txt", run_report_summary(report));

  json config;
  config["model"] = json::parse(config_json(mc));
  config["train"] = train_config_echo(tc);
  write_manifest(dir, "train", f.seed, config, {f.data.task_p, f.data.task_e},
                 {"checkpoint.bin", "report.csv", "summary.txt"});

  const EpochRow& last = report.rows.back();
  std::cout << metrics_kv(last.p_metrics, last.e_accuracy);
  return 0;
}

struct EvalFlags {
  std::string checkpoint;
  std::string task_p;
  std::string task_e;
  std::string out_dir;
};

int run_eval(const EvalFlags& f) {
  const Checkpoint ckpt = load_checkpoint(f.checkpoint);
  const auto raw_p = load_delimited(f.task_p, ckpt.schema_p);
  const auto raw_e = load_delimited(f.task_e, ckpt.schema_e);
  const Dataset dp = build_dataset_with_vocab(
      raw_p, ckpt.schema_p, ckpt.seed, Vocabulary::from_tokens(ckpt.vocab_p));
  const Dataset de = build_dataset_with_vocab(
      raw_e, ckpt.schema_e, ckpt.seed, Vocabulary::from_tokens(ckpt.vocab_e));

  const EvalResult ev = evaluate(ckpt.model, dp, de, ckpt.seed);
  const std::string kv = metrics_kv(ev.p_metrics, ev.e_accuracy);
  const std::string csv = metrics_csv_header() + "\n" +
                          metrics_csv_row(ev.p_metrics, ev.e_accuracy) + "\n";
  std::cout << kv;
  if (!f.out_dir.empty()) {
    fs::create_directories(f.out_dir);
    const fs::path dir(f.out_dir);
    write_text(dir / "metrics.txt", kv);
    write_text(dir / "metrics.csv", csv);
    write_manifest(dir, "eval", ckpt.seed,
                   json{{"checkpoint", f.checkpoint},
                        {"model", json::parse(config_json(ckpt.model.config))}},
                   {f.checkpoint, f.task_p, f.task_e},
                   {"metrics.txt", "metrics.csv"});
  }
  return 0;
}

struct GridFlags {
  DataFlags data;
  ModelFlags model;
  TrainFlags train;
  std::string gates = "none,sig,cag,silg,sog";
  std::string opts = "adam,maml";
  std::uint64_t seed = 0;
  std::size_t seeds = 5;
  std::size_t jobs = default_jobs();
  std::string out_dir;
};

int run_grid(const GridFlags& f) {
  const LoadedPair d = load_pair(f.data, f.seed);
  const ModelConfig mc = model_config_from_flags(f.model, d);
  const TrainConfig tc = train_config_from_flags(f.train, f.seed);

  std::vector<GateKind> gates;
  for (const std::string& g : split_list(f.gates))
    gates.push_back(gate_from_name(g));
  std::vector<Optimizer> opts;
  for (const std::string& o : split_list(f.opts))
    opts.push_back(optimizer_from_name(o));

  const GridResult g = comparison_grid(mc, tc, d.p, d.e, gates, opts,
                                       seed_list(f.seed, f.seeds), f.jobs);
  const std::string csv = grid_csv(g);
  std::cout << csv;
  fs::create_directories(f.out_dir);
  const fs::path dir(f.out_dir);
  write_text(dir / "grid.csv", csv);
  json config;
  config["model"] = json::parse(config_json(mc));
  config["train"] = train_config_echo(tc);
  config["gates"] = f.gates;
  config["optimizers"] = f.opts;
  config["seeds"] = f.seeds;
  write_manifest(dir, "grid", f.seed, config, {f.data.task_p, f.data.task_e},
                 {"grid.csv"});
  return 0;
}

struct AblateFlags {
  DataFlags data;
  ModelFlags model;
  TrainFlags train;
  std::uint64_t seed = 0;
  std::size_t seeds = 5;
  std::size_t jobs = default_jobs();
  std::string out_dir;
};

int run_ablate(const AblateFlags& f) {
  const LoadedPair d = load_pair(f.data, f.seed);
  const ModelConfig mc = model_config_from_flags(f.model, d);
  const TrainConfig tc = train_config_from_flags(f.train, f.seed);
  const AblationResult a =
      placement_ablation(mc, tc, d.p, d.e, seed_list(f.seed, f.seeds), f.jobs);
  const std::string csv = ablation_csv(a);
  std::cout << csv;
  fs::create_directories(f.out_dir);
  const fs::path dir(f.out_dir);
  write_text(dir / "ablation.csv", csv);
  json config;
  config["model"] = json::parse(config_json(mc));
  config["train"] = train_config_echo(tc);
  config["seeds"] = f.seeds;
  write_manifest(dir, "ablate", f.seed, config, {f.data.task_p, f.data.task_e},
                 {"ablation.csv"});
  return 0;
}

struct ProbeFlags {
  std::string checkpoint;
  std::string task_p;
  std::string task_e;
  std::string out_dir;
};

int run_probe(const ProbeFlags& f) {
  const Checkpoint ckpt = load_checkpoint(f.checkpoint);
  const auto raw_p = load_delimited(f.task_p, ckpt.schema_p);
  const auto raw_e = load_delimited(f.task_e, ckpt.schema_e);
  const Dataset dp = build_dataset_with_vocab(
      raw_p, ckpt.schema_p, ckpt.seed, Vocabulary::from_tokens(ckpt.vocab_p));
  const Dataset de = build_dataset_with_vocab(
      raw_e, ckpt.schema_e, ckpt.seed, Vocabulary::from_tokens(ckpt.vocab_e));
  const ProbeReport rep = cosine_probe(ckpt.model, dp, de, ckpt.seed);
  const std::string kv = probe_kv(rep);
  std::cout << kv;
  if (!f.out_dir.empty()) {
    fs::create_directories(f.out_dir);
    write_text(fs::path(f.out_dir) / "probe.txt", kv);
    write_manifest(fs::path(f.out_dir), "probe", ckpt.seed,
                   json{{"checkpoint", f.checkpoint},
                        {"model", json::parse(config_json(ckpt.model.config))}},
                   {f.checkpoint, f.task_p, f.task_e}, {"probe.txt"});
  }
  return 0;
}

struct BenchFlags {
  DataFlags data;
  ModelFlags model;
  TrainFlags train;
  std::string gates = "none,sig,cag,silg,sog";
  std::uint64_t seed = 0;
  std::size_t epochs = 3;
  std::string out_dir;
};

int run_bench(const BenchFlags& f) {
  const LoadedPair d = load_pair(f.data, f.seed);
  const ModelConfig mc = model_config_from_flags(f.model, d);
  const TrainConfig tc = train_config_from_flags(f.train, f.seed);
  std::vector<GateKind> gates;
  for (const std::string& g : split_list(f.gates))
    gates.push_back(gate_from_name(g));
  const TimingReport rep = time_gates(mc, tc, d.p, d.e, gates, f.epochs);
  std::cout << timing_kv(rep);
  fs::create_directories(f.out_dir);
  const fs::path dir(f.out_dir);
  write_text(dir / "bench.csv", timing_csv(rep));
  write_text(dir / "bench.txt", timing_kv(rep));
  json config;
  config["model"] = json::parse(config_json(mc));
  config["train"] = train_config_echo(tc);
  config["gates"] = f.gates;
  config["epochs"] = f.epochs;
  write_manifest(dir, "bench", f.seed, config, {f.data.task_p, f.data.task_e},
                 {"bench.csv", "bench.txt"});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gmtl " + version_string() +
               " - twin-tower CNN multitask text classification with "
               "information-sharing gates"};
  app.require_subcommand(1);

  SynthFlags synth;
  CLI::App* cmd_synth =
      app.add_subcommand("synth", "generate a paired synthetic corpus");
  cmd_synth->add_option("--n", synth.n, "examples per task");
  cmd_synth->add_option("--vocab", synth.vocab, "vocabulary size");
  cmd_synth->add_option("--rho", synth.rho, "cross-task coupling in [0,1]")
      ->check(CLI::Range(0.0, 1.0));
  cmd_synth->add_option("--seed", synth.seed, "generator seed");
  cmd_synth->add_option("--min-tokens", synth.min_tokens, "shortest text");
  cmd_synth->add_option("--max-tokens", synth.max_tokens, "longest text");
  cmd_synth->add_option("--marker-keep", synth.marker_keep,
                        "marker token survival probability");
  cmd_synth->add_option("--out-dir", synth.out_dir, "output directory")
      ->required();

  TrainCmdFlags train;
  CLI::App* cmd_train = app.add_subcommand("train", "train a model pair");
  add_data_flags(cmd_train, train.data);
  add_model_flags(cmd_train, train.model);
  add_train_flags(cmd_train, train.train);
  cmd_train->add_option("--seed", train.seed, "root seed for the run");
  cmd_train->add_option("--out", train.out_dir, "output directory")->required();

  EvalFlags eval;
  CLI::App* cmd_eval =
      app.add_subcommand("eval", "evaluate a checkpoint on the test splits");
  cmd_eval->add_option("--checkpoint", eval.checkpoint, "checkpoint file")
      ->required();
  cmd_eval->add_option("--task-p", eval.task_p, "personality dataset")
      ->required();
  cmd_eval->add_option("--task-e", eval.task_e, "emotion dataset")->required();
  cmd_eval->add_option("--out", eval.out_dir, "optional output directory");

  GridFlags grid;
  CLI::App* cmd_grid = app.add_subcommand(
      "grid", "gate x optimizer comparison grid, mean over seeds");
  add_data_flags(cmd_grid, grid.data);
  add_model_flags(cmd_grid, grid.model);
  add_train_flags(cmd_grid, grid.train);
  cmd_grid->add_option("--gates", grid.gates, "gate kinds to compare");
  cmd_grid->add_option("--opts", grid.opts, "optimizers to compare");
  cmd_grid->add_option("--seed", grid.seed, "base seed");
  cmd_grid->add_option("--seeds", grid.seeds, "independent runs per cell");
  cmd_grid->add_option("--jobs", grid.jobs, "parallel workers (env GMTL_JOBS)");
  cmd_grid->add_option("--out", grid.out_dir, "output directory")->required();

  AblateFlags ablate;
  CLI::App* cmd_ablate = app.add_subcommand(
      "ablate", "single-level SoG placement ablation with cosine probes");
  add_data_flags(cmd_ablate, ablate.data);
  add_model_flags(cmd_ablate, ablate.model, /*with_gate=*/false);
  add_train_flags(cmd_ablate, ablate.train);
  cmd_ablate->add_option("--seed", ablate.seed, "base seed");
  cmd_ablate->add_option("--seeds", ablate.seeds,
                         "independent runs per variant");
  cmd_ablate->add_option("--jobs", ablate.jobs,
                         "parallel workers (env GMTL_JOBS)");
  cmd_ablate->add_option("--out", ablate.out_dir, "output directory")
      ->required();

  ProbeFlags probe;
  CLI::App* cmd_probe = app.add_subcommand(
      "probe", "cross-task cosine similarity of a trained checkpoint");
  cmd_probe->add_option("--checkpoint", probe.checkpoint, "checkpoint file")
      ->required();
  cmd_probe->add_option("--task-p", probe.task_p, "personality dataset")
      ->required();
  cmd_probe->add_option("--task-e", probe.task_e, "emotion dataset")->required();
  cmd_probe->add_option("--out", probe.out_dir, "optional output directory");

  BenchFlags bench;
  CLI::App* cmd_bench =
      app.add_subcommand("bench", "wall-clock epoch timing per gate kind");
  add_data_flags(cmd_bench, bench.data);
  add_model_flags(cmd_bench, bench.model, /*with_gate=*/false);
  add_train_flags(cmd_bench, bench.train);
  cmd_bench->add_option("--gates", bench.gates, "gate kinds to time");
  cmd_bench->add_option("--seed", bench.seed, "seed");
  cmd_bench->add_option("--bench-epochs", bench.epochs,
                        "timed epochs per gate");
  cmd_bench->add_option("--out", bench.out_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (cmd_synth->parsed()) return run_synth(synth);
    if (cmd_train->parsed())
      return run_train(train, cmd_train->count("--k") > 0);
    if (cmd_eval->parsed()) return run_eval(eval);
    if (cmd_grid->parsed()) return run_grid(grid);
    if (cmd_ablate->parsed()) return run_ablate(ablate);
    if (cmd_probe->parsed()) return run_probe(probe);
    if (cmd_bench->parsed()) return run_bench(bench);
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 4;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const InvalidInput& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
