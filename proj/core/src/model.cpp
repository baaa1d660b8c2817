#include "gmtl/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>

#include "json.hpp"

namespace gmtl {

GateKind gate_from_name(std::string_view name) {
  if (name == "none") return GateKind::None;
  if (name == "sig") return GateKind::SiG;
  if (name == "cag") return GateKind::CAG;
  if (name == "silg") return GateKind::SiLG;
  if (name == "sog") return GateKind::SoG;
  throw InvalidInput("unknown gate: " + std::string(name));
}

std::string_view gate_name(GateKind g) {
  switch (g) {
    case GateKind::None: return "none";
    case GateKind::SiG: return "sig";
    case GateKind::CAG: return "cag";
    case GateKind::SiLG: return "silg";
    case GateKind::SoG: return "sog";
  }
  return "none";
}

Level level_from_name(std::string_view name) {
  if (name == "conv") return Level::Conv;
  if (name == "pool") return Level::Pool;
  if (name == "dense") return Level::Dense;
  throw InvalidInput("unknown gate level: " + std::string(name));
}

std::string_view level_name(Level l) {
  switch (l) {
    case Level::Conv: return "conv";
    case Level::Pool: return "pool";
    case Level::Dense: return "dense";
  }
  return "conv";
}

std::size_t ModelConfig::max_filter_width() const {
  std::size_t m = 1;
  for (std::size_t w : filter_widths) m = std::max(m, w);
  return m;
}

bool ModelConfig::gated_at(Level l) const {
  if (gate == GateKind::None) return false;
  return std::find(placement.begin(), placement.end(), l) != placement.end();
}

void ModelConfig::validate() const {
  if (embedding_dim == 0 || filters_per_width == 0 || dense_hidden == 0)
    throw InvalidInput("model dimensions must be positive");
  if (personality_classes == 0 || emotion_classes == 0)
    throw InvalidInput("class counts must be positive");
  if (filter_widths.empty())
    throw InvalidInput("at least one filter width required");
  for (std::size_t w : filter_widths)
    if (w == 0) throw InvalidInput("filter widths must be positive");
  if (gate != GateKind::None && placement.empty())
    throw InvalidInput("a gated model needs a non-empty placement set");
}

Tensor& Parameters::add(const std::string& name, Tensor t) {
  if (has(name)) throw InvalidInput("duplicate parameter: " + name);
  index_[name] = values_.size();
  names_.push_back(name);
  values_.push_back(std::move(t));
  return values_.back();
}

Tensor& Parameters::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw InvalidInput("unknown parameter: " + name);
  return values_[it->second];
}

const Tensor& Parameters::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw InvalidInput("unknown parameter: " + name);
  return values_[it->second];
}

std::vector<Tensor*> Parameters::pointers() {
  std::vector<Tensor*> out;
  out.reserve(values_.size());
  for (Tensor& t : values_) out.push_back(&t);
  return out;
}

void Parameters::restore(const std::vector<Tensor>& snap) {
  if (snap.size() != values_.size())
    throw InvalidInput("parameter snapshot size mismatch");
  for (std::size_t i = 0; i < snap.size(); ++i) {
    if (!snap[i].same_shape(values_[i]))
      throw InvalidInput("parameter snapshot shape mismatch");
    values_[i] = snap[i];
  }
}

std::uint64_t Parameters::digest() const {
  std::uint64_t h = 0xCBF29CE484222325ull;
  const auto mix_bytes = [&h](const void* p, std::size_t n) {
    const unsigned char* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 0x100000001B3ull;
    }
  };
  for (std::size_t i = 0; i < values_.size(); ++i) {
    mix_bytes(names_[i].data(), names_[i].size());
    mix_bytes(values_[i].data(), values_[i].size() * sizeof(double));
  }
  return h;
}

namespace {

void init_uniform(Tensor& t, Rng rng, double bound) {
  for (std::size_t i = 0; i < t.size(); ++i) t.at(i) = rng.uniform(-bound, bound);
}

void add_tower_params(Model& m, const std::string& prefix, std::size_t vocab,
                      std::size_t classes, std::uint64_t seed) {
  const ModelConfig& c = m.config;
  const Rng root(seed);
  const auto named = [&](const std::string& n) { return root.fork("init/" + n); };

  Tensor emb({vocab, c.embedding_dim});
  init_uniform(emb, named(prefix + ".embedding"),
               1.0 / std::sqrt(static_cast<double>(c.embedding_dim)));
  m.params.add(prefix + ".embedding", std::move(emb));

  for (std::size_t w : c.filter_widths) {
    const std::string ws = std::to_string(w);
    Tensor cw({c.filters_per_width, w, c.embedding_dim});
    init_uniform(cw, named(prefix + ".conv.w" + ws),
                 1.0 / std::sqrt(static_cast<double>(w * c.embedding_dim)));
    m.params.add(prefix + ".conv.w" + ws, std::move(cw));
    m.params.add(prefix + ".conv.b" + ws, Tensor({c.filters_per_width}));
  }

  Tensor dw({c.pooled_len(), c.dense_hidden});
  init_uniform(dw, named(prefix + ".dense.w"),
               1.0 / std::sqrt(static_cast<double>(c.pooled_len())));
  m.params.add(prefix + ".dense.w", std::move(dw));
  m.params.add(prefix + ".dense.b", Tensor({c.dense_hidden}));

  Tensor hw({c.dense_hidden, classes});
  init_uniform(hw, named(prefix + ".head.w"),
               1.0 / std::sqrt(static_cast<double>(c.dense_hidden)));
  m.params.add(prefix + ".head.w", std::move(hw));
  m.params.add(prefix + ".head.b", Tensor({classes}));
}

Tensor scaled_identity(std::size_t n, double s) {
  Tensor t({n, n});
  for (std::size_t i = 0; i < n; ++i) t.at2(i, i) = s;
  return t;
}

}  // namespace

Model init_model(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  if (config.personality_vocab < 2 || config.emotion_vocab < 2)
    throw InvalidInput("init_model: vocabulary sizes not set");
  Model m;
  m.config = config;
  add_tower_params(m, "p", config.personality_vocab, config.personality_classes, seed);
  add_tower_params(m, "e", config.emotion_vocab, config.emotion_classes, seed);
  if (config.gate == GateKind::CAG) {
    // Bilinear matrices start near diagonal attention.
    for (Level l : {Level::Conv, Level::Pool, Level::Dense}) {
      if (!config.gated_at(l)) continue;
      const std::size_t n = l == Level::Conv ? config.filters_per_width : 1;
      const std::string base = "gate." + std::string(level_name(l));
      m.params.add(base + ".pe", scaled_identity(n, 0.1));
      m.params.add(base + ".ep", scaled_identity(n, 0.1));
    }
  }
  return m;
}

Tensor TowerState::conv_concat() const {
  std::size_t total = 0;
  for (const Tensor& t : conv_maps) total += t.size();
  Tensor out({std::max<std::size_t>(total, 1)});
  std::size_t off = 0;
  for (const Tensor& t : conv_maps) {
    for (std::size_t i = 0; i < t.size(); ++i) out.at(off + i) = t.at(i);
    off += t.size();
  }
  return out;
}

std::pair<NodeId, NodeId> gate_apply(Tape& tape, GateKind kind, NodeId c1,
                                     NodeId c2, NodeId w12, NodeId w21,
                                     bool cross_value) {
  if (kind == GateKind::None) return {c1, c2};
  if (!tape.value(c1).same_shape(tape.value(c2)))
    throw InvalidInput("gate_apply: activation shapes differ");
  switch (kind) {
    case GateKind::SiG:
      return {tape.add(c1, tape.sigmoid(c2)), tape.add(c2, tape.sigmoid(c1))};
    case GateKind::SiLG:
      return {tape.add(c1, tape.mul(tape.sigmoid(c2), c2)),
              tape.add(c2, tape.mul(tape.sigmoid(c1), c1))};
    case GateKind::SoG:
      return {tape.add(c1, tape.mul(tape.softmax(c2, 0), c2)),
              tape.add(c2, tape.mul(tape.softmax(c1, 0), c1))};
    case GateKind::CAG: {
      const NodeId a12 =
          tape.softmax(tape.matmul(tape.matmul(c1, w12), tape.transpose(c2)), 1);
      const NodeId h2 = tape.add(c2, tape.matmul(a12, cross_value ? c1 : c2));
      const NodeId a21 =
          tape.softmax(tape.matmul(tape.matmul(c2, w21), tape.transpose(c1)), 1);
      const NodeId h1 = tape.add(c1, tape.matmul(a21, cross_value ? c2 : c1));
      return {h1, h2};
    }
    case GateKind::None: break;
  }
  return {c1, c2};
}

ModelGraph::ModelGraph(Tape& tape, const Model& model)
    : tape_(&tape), model_(&model) {}

NodeId ModelGraph::param(const std::string& name) {
  auto it = bound_.find(name);
  if (it != bound_.end()) return it->second;
  const NodeId id = tape_->leaf(model_->params.get(name));
  bound_.emplace(name, id);
  return id;
}

NodeId ModelGraph::tower(const std::string& task, const std::vector<int>& tokens,
                         TowerState* state) {
  const ModelConfig& c = model_->config;
  if (tokens.size() < c.max_filter_width())
    throw InvalidInput("tower: token sequence shorter than widest filter");
  Tape& t = *tape_;
  const NodeId emb = t.embedding_rows(param(task + ".embedding"), tokens);
  std::vector<NodeId> pooled_parts;
  for (std::size_t w : c.filter_widths) {
    const std::string ws = std::to_string(w);
    const NodeId map = t.conv1d_bank(emb, param(task + ".conv.w" + ws),
                                     param(task + ".conv.b" + ws), c.activation);
    if (state) state->conv_maps.push_back(t.value(map));
    pooled_parts.push_back(t.max_pool_columns(map));
  }
  const NodeId pooled = t.concat(pooled_parts);
  const NodeId hidden = t.activate(
      t.dense(pooled, param(task + ".dense.w"), param(task + ".dense.b")),
      c.activation);
  const NodeId logits =
      t.dense(hidden, param(task + ".head.w"), param(task + ".head.b"));
  if (state) {
    state->pooled = t.value(pooled);
    state->dense_hidden = t.value(hidden);
    state->logits = t.value(logits);
  }
  return logits;
}

std::pair<NodeId, NodeId> ModelGraph::pair(const std::vector<int>& tokens_p,
                                           const std::vector<int>& tokens_e,
                                           TowerState* state_p,
                                           TowerState* state_e) {
  const ModelConfig& c = model_->config;
  if (c.gate == GateKind::None) {
    // No coupling: exactly two independent towers.
    const NodeId lp = tower("p", tokens_p, state_p);
    const NodeId le = tower("e", tokens_e, state_e);
    return {lp, le};
  }
  if (c.gated_at(Level::Conv) && tokens_p.size() != tokens_e.size())
    throw InvalidInput("pair: conv-level gating needs equal padded lengths");
  Tape& t = *tape_;
  const NodeId none{0};

  const auto level_w = [&](Level l, const char* dir) -> NodeId {
    if (c.gate != GateKind::CAG) return none;
    return param("gate." + std::string(level_name(l)) + "." + dir);
  };

  const NodeId emb_p = t.embedding_rows(param("p.embedding"), tokens_p);
  const NodeId emb_e = t.embedding_rows(param("e.embedding"), tokens_e);

  std::vector<NodeId> pooled_p, pooled_e;
  for (std::size_t w : c.filter_widths) {
    const std::string ws = std::to_string(w);
    NodeId map_p = t.conv1d_bank(emb_p, param("p.conv.w" + ws),
                                 param("p.conv.b" + ws), c.activation);
    NodeId map_e = t.conv1d_bank(emb_e, param("e.conv.w" + ws),
                                 param("e.conv.b" + ws), c.activation);
    if (c.gated_at(Level::Conv))
      std::tie(map_p, map_e) =
          gate_apply(t, c.gate, map_p, map_e, level_w(Level::Conv, "pe"),
                     level_w(Level::Conv, "ep"), c.cag_cross_value);
    if (state_p) state_p->conv_maps.push_back(t.value(map_p));
    if (state_e) state_e->conv_maps.push_back(t.value(map_e));
    pooled_p.push_back(t.max_pool_columns(map_p));
    pooled_e.push_back(t.max_pool_columns(map_e));
  }

  NodeId pool_p = t.concat(pooled_p);
  NodeId pool_e = t.concat(pooled_e);
  if (c.gated_at(Level::Pool)) {
    const std::size_t P = c.pooled_len();
    auto [gp, ge] = gate_apply(t, c.gate, t.reshape(pool_p, {P, 1}),
                               t.reshape(pool_e, {P, 1}),
                               level_w(Level::Pool, "pe"),
                               level_w(Level::Pool, "ep"), c.cag_cross_value);
    pool_p = t.reshape(gp, {P});
    pool_e = t.reshape(ge, {P});
  }
  if (state_p) state_p->pooled = t.value(pool_p);
  if (state_e) state_e->pooled = t.value(pool_e);

  NodeId hid_p = t.activate(
      t.dense(pool_p, param("p.dense.w"), param("p.dense.b")), c.activation);
  NodeId hid_e = t.activate(
      t.dense(pool_e, param("e.dense.w"), param("e.dense.b")), c.activation);
  if (c.gated_at(Level::Dense)) {
    const std::size_t H = c.dense_hidden;
    auto [gp, ge] = gate_apply(t, c.gate, t.reshape(hid_p, {H, 1}),
                               t.reshape(hid_e, {H, 1}),
                               level_w(Level::Dense, "pe"),
                               level_w(Level::Dense, "ep"), c.cag_cross_value);
    hid_p = t.reshape(gp, {H});
    hid_e = t.reshape(ge, {H});
  }
  if (state_p) state_p->dense_hidden = t.value(hid_p);
  if (state_e) state_e->dense_hidden = t.value(hid_e);

  const NodeId logit_p =
      t.dense(hid_p, param("p.head.w"), param("p.head.b"));
  const NodeId logit_e =
      t.dense(hid_e, param("e.head.w"), param("e.head.b"));
  if (state_p) state_p->logits = t.value(logit_p);
  if (state_e) state_e->logits = t.value(logit_e);
  return {logit_p, logit_e};
}

std::vector<Tensor> ModelGraph::grads() const {
  std::vector<Tensor> out;
  out.reserve(model_->params.count());
  for (std::size_t i = 0; i < model_->params.count(); ++i) {
    auto it = bound_.find(model_->params.names()[i]);
    if (it == bound_.end())
      out.emplace_back(model_->params.at(i).shape());
    else
      out.push_back(tape_->grad(it->second));
  }
  return out;
}

TowerState tower_forward(const Model& model, const std::string& task,
                         const std::vector<int>& tokens) {
  Tape tape;
  ModelGraph g(tape, model);
  TowerState s;
  g.tower(task, tokens, &s);
  return s;
}

std::pair<TowerState, TowerState> mtl_forward(const Model& model,
                                              const std::vector<int>& tokens_p,
                                              const std::vector<int>& tokens_e) {
  Tape tape;
  ModelGraph g(tape, model);
  TowerState sp, se;
  g.pair(tokens_p, tokens_e, &sp, &se);
  return {sp, se};
}

// ---------------------------------------------------------------------------
// Checkpoint I/O. Layout: magic, u32 version, length-prefixed JSON header
// (config, vocabularies, schemas, seed), parameter blocks (name, dims, raw
// little-endian doubles), trailing FNV-1a digest of everything before it.
// ---------------------------------------------------------------------------

namespace {

using nlohmann::json;

void put_u32(std::string& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put_u64(std::string& b, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put_f64(std::string& b, double d) {
  std::uint64_t v;
  std::memcpy(&v, &d, 8);
  put_u64(b, v);
}

struct Reader {
  const std::string& buf;
  std::size_t pos = 0;
  void need(std::size_t n) const {
    if (pos + n > buf.size()) throw DataError("checkpoint truncated");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 8;
    return v;
  }
  double f64() {
    const std::uint64_t v = u64();
    double d;
    std::memcpy(&d, &v, 8);
    return d;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = buf.substr(pos, n);
    pos += n;
    return s;
  }
};

constexpr char kMagic[8] = {'G', 'M', 'T', 'L', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

json schema_to_json(const LabelSchema& s) {
  return json{{"kind", s.kind == LabelKind::Multilabel ? "multilabel" : "multiclass"},
              {"labels", s.labels}};
}

LabelSchema schema_from_json(const json& j) {
  LabelSchema s;
  s.kind = j.at("kind").get<std::string>() == "multilabel" ? LabelKind::Multilabel
                                                           : LabelKind::Multiclass;
  s.labels = j.at("labels").get<std::vector<std::string>>();
  return s;
}

json config_to_json(const ModelConfig& c) {
  std::vector<std::string> placement;
  for (Level l : {Level::Conv, Level::Pool, Level::Dense})
    if (std::find(c.placement.begin(), c.placement.end(), l) != c.placement.end())
      placement.emplace_back(level_name(l));
  return json{{"embedding_dim", c.embedding_dim},
              {"filter_widths", c.filter_widths},
              {"filters_per_width", c.filters_per_width},
              {"dense_hidden", c.dense_hidden},
              {"personality_classes", c.personality_classes},
              {"emotion_classes", c.emotion_classes},
              {"gate", std::string(gate_name(c.gate))},
              {"placement", placement},
              {"activation", std::string(activation_name(c.activation))},
              {"cag_cross_value", c.cag_cross_value},
              {"personality_vocab", c.personality_vocab},
              {"emotion_vocab", c.emotion_vocab}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.embedding_dim = j.at("embedding_dim").get<std::size_t>();
  c.filter_widths = j.at("filter_widths").get<std::vector<std::size_t>>();
  c.filters_per_width = j.at("filters_per_width").get<std::size_t>();
  c.dense_hidden = j.at("dense_hidden").get<std::size_t>();
  c.personality_classes = j.at("personality_classes").get<std::size_t>();
  c.emotion_classes = j.at("emotion_classes").get<std::size_t>();
  c.gate = gate_from_name(j.at("gate").get<std::string>());
  c.placement.clear();
  for (const auto& s : j.at("placement"))
    c.placement.push_back(level_from_name(s.get<std::string>()));
  c.activation = activation_from_name(j.at("activation").get<std::string>());
  c.cag_cross_value = j.at("cag_cross_value").get<bool>();
  c.personality_vocab = j.at("personality_vocab").get<std::size_t>();
  c.emotion_vocab = j.at("emotion_vocab").get<std::size_t>();
  return c;
}

}  // namespace

std::string config_json(const ModelConfig& config) {
  return config_to_json(config).dump();
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  json header;
  header["config"] = config_to_json(ckpt.model.config);
  header["vocab_p"] = ckpt.vocab_p;
  header["vocab_e"] = ckpt.vocab_e;
  header["schema_p"] = schema_to_json(ckpt.schema_p);
  header["schema_e"] = schema_to_json(ckpt.schema_e);
  header["seed"] = ckpt.seed;
  const std::string hs = header.dump();

  std::string buf;
  buf.append(kMagic, sizeof kMagic);
  put_u32(buf, kVersion);
  put_u64(buf, hs.size());
  buf += hs;
  put_u32(buf, static_cast<std::uint32_t>(ckpt.model.params.count()));
  for (std::size_t i = 0; i < ckpt.model.params.count(); ++i) {
    const std::string& name = ckpt.model.params.names()[i];
    const Tensor& t = ckpt.model.params.at(i);
    put_u32(buf, static_cast<std::uint32_t>(name.size()));
    buf += name;
    put_u32(buf, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t dim : t.shape()) put_u64(buf, dim);
    for (std::size_t k = 0; k < t.size(); ++k) put_f64(buf, t.at(k));
  }
  put_u64(buf, fnv1a64(buf));

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw DataError("short write on checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  std::string buf((std::istreambuf_iterator<char>(in)),
                  std::istreambuf_iterator<char>());
  if (buf.size() < sizeof kMagic + 12) throw DataError("checkpoint truncated");

  const std::string body = buf.substr(0, buf.size() - 8);
  Reader tail{buf, buf.size() - 8};
  if (tail.u64() != fnv1a64(body))
    throw DataError("checkpoint digest mismatch (file corrupted): " + path);

  Reader r{body};
  if (r.bytes(sizeof kMagic) != std::string(kMagic, sizeof kMagic))
    throw DataError("not a checkpoint file: " + path);
  if (r.u32() != kVersion) throw DataError("unsupported checkpoint version");

  json header;
  try {
    header = json::parse(r.bytes(r.u64()));
  } catch (const json::exception& e) {
    throw DataError(std::string("bad checkpoint header: ") + e.what());
  }

  Checkpoint ckpt;
  try {
    ckpt.model.config = config_from_json(header.at("config"));
    ckpt.vocab_p = header.at("vocab_p").get<std::vector<std::string>>();
    ckpt.vocab_e = header.at("vocab_e").get<std::vector<std::string>>();
    ckpt.schema_p = schema_from_json(header.at("schema_p"));
    ckpt.schema_e = schema_from_json(header.at("schema_e"));
    ckpt.seed = header.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw DataError(std::string("bad checkpoint header: ") + e.what());
  }

  const std::uint32_t n_params = r.u32();
  for (std::uint32_t i = 0; i < n_params; ++i) {
    const std::string name = r.bytes(r.u32());
    const std::uint32_t rank = r.u32();
    std::vector<std::size_t> shape;
    std::size_t total = 1;
    for (std::uint32_t k = 0; k < rank; ++k) {
      shape.push_back(r.u64());
      total *= shape.back();
    }
    std::vector<double> data(total);
    for (std::size_t k = 0; k < total; ++k) data[k] = r.f64();
    ckpt.model.params.add(name, Tensor(std::move(shape), std::move(data)));
  }
  return ckpt;
}

}  // namespace gmtl
