#include "gmtl/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace gmtl {

std::optional<std::size_t> LabelSchema::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == name) return i;
  return std::nullopt;
}

void LabelSchema::validate() const {
  if (labels.empty()) throw InvalidInput("label schema has no labels");
  std::set<std::string> seen(labels.begin(), labels.end());
  if (seen.size() != labels.size())
    throw InvalidInput("label schema has duplicate names");
}

LabelSchema LabelSchema::personality() {
  return {LabelKind::Multilabel,
          {"openness", "conscientiousness", "extraversion", "agreeableness",
           "neuroticism"}};
}

LabelSchema LabelSchema::isear() {
  return {LabelKind::Multiclass,
          {"anger", "disgust", "fear", "joy", "sadness", "shame", "guilt"}};
}

LabelSchema LabelSchema::tec() {
  return {LabelKind::Multiclass,
          {"joy", "anger", "disgust", "surprise", "fear", "sadness"}};
}

Vocabulary::Vocabulary() {
  id_to_token_ = {"<pad>", "<unk>"};
  token_to_id_ = {{"<pad>", kPad}, {"<unk>", kUnk}};
}

Vocabulary Vocabulary::build(const std::vector<std::vector<std::string>>& texts,
                             std::size_t min_count) {
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& toks : texts)
    for (const auto& t : toks) ++counts[t];
  Vocabulary v;
  for (const auto& toks : texts)
    for (const auto& t : toks) {
      if (counts[t] < min_count) continue;
      if (v.token_to_id_.emplace(t, static_cast<int>(v.id_to_token_.size())).second)
        v.id_to_token_.push_back(t);
    }
  return v;
}

int Vocabulary::id(std::string_view token) const {
  auto it = token_to_id_.find(std::string(token));
  return it == token_to_id_.end() ? kUnk : it->second;
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  if (tokens.size() < 2 || tokens[0] != "<pad>" || tokens[1] != "<unk>")
    throw DataError("vocabulary token list must start with <pad>, <unk>");
  Vocabulary v;
  v.id_to_token_ = std::move(tokens);
  v.token_to_id_.clear();
  for (std::size_t i = 0; i < v.id_to_token_.size(); ++i)
    v.token_to_id_[v.id_to_token_[i]] = static_cast<int>(i);
  if (v.token_to_id_.size() != v.id_to_token_.size())
    throw DataError("vocabulary token list has duplicates");
  return v;
}

namespace {

bool is_unicode_space(char32_t cp) {
  switch (cp) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D:
    case 0x20: case 0x85: case 0xA0: case 0x1680:
    case 0x2028: case 0x2029: case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

bool is_ascii_punct(unsigned char c) {
  return (c >= 33 && c <= 47) || (c >= 58 && c <= 64) ||
         (c >= 91 && c <= 96) || (c >= 123 && c <= 126);
}

// Decodes one UTF-8 codepoint starting at i; on malformed input the single
// byte is taken verbatim. Returns the codepoint and advances i.
char32_t decode_utf8(std::string_view s, std::size_t& i) {
  const unsigned char b0 = static_cast<unsigned char>(s[i]);
  std::size_t extra = 0;
  char32_t cp = b0;
  if (b0 >= 0xF0) { extra = 3; cp = b0 & 0x07u; }
  else if (b0 >= 0xE0) { extra = 2; cp = b0 & 0x0Fu; }
  else if (b0 >= 0xC0) { extra = 1; cp = b0 & 0x1Fu; }
  if (extra == 0 || i + extra >= s.size()) {
    ++i;
    return b0;
  }
  for (std::size_t k = 1; k <= extra; ++k) {
    const unsigned char bk = static_cast<unsigned char>(s[i + k]);
    if ((bk & 0xC0u) != 0x80u) {
      ++i;
      return b0;
    }
    cp = (cp << 6) | (bk & 0x3Fu);
  }
  i += extra + 1;
  return cp;
}

void finish_token(std::string& tok, std::vector<std::string>& out) {
  std::size_t b = 0, e = tok.size();
  while (b < e && is_ascii_punct(static_cast<unsigned char>(tok[b]))) ++b;
  while (e > b && is_ascii_punct(static_cast<unsigned char>(tok[e - 1]))) --e;
  if (e > b) out.push_back(tok.substr(b, e - b));
  tok.clear();
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string tok;
  std::size_t i = 0;
  while (i < text.size()) {
    const std::size_t start = i;
    const char32_t cp = decode_utf8(text, i);
    if (is_unicode_space(cp)) {
      finish_token(tok, out);
    } else {
      for (std::size_t k = start; k < i; ++k) {
        char c = text[k];
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
        tok.push_back(c);
      }
    }
  }
  finish_token(tok, out);
  return out;
}

namespace {

Label parse_label_field(const std::string& field, const LabelSchema& schema,
                        const std::string& where) {
  Label label;
  if (schema.kind == LabelKind::Multilabel) {
    label.bits.assign(schema.count(), 0);
    if (field.empty()) return label;  // no traits set
    std::stringstream ss(field);
    std::string name;
    while (std::getline(ss, name, ',')) {
      // trim surrounding blanks
      const auto b = name.find_first_not_of(" \t");
      const auto e = name.find_last_not_of(" \t");
      if (b == std::string::npos) throw DataError(where + ": empty label name");
      name = name.substr(b, e - b + 1);
      const auto idx = schema.index_of(name);
      if (!idx) throw DataError(where + ": unknown label '" + name + "'");
      label.bits[*idx] = 1;
    }
  } else {
    const auto idx = schema.index_of(field);
    if (!idx) throw DataError(where + ": unknown label '" + field + "'");
    label.index = *idx;
  }
  return label;
}

}  // namespace

std::vector<RawExample> load_delimited(const std::string& path,
                                       const LabelSchema& schema) {
  schema.validate();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dataset file: " + path);
  std::vector<RawExample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const std::string where = path + ":" + std::to_string(line_no);
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw DataError(where + ": missing tab separator");
    const std::string field = line.substr(0, tab);
    std::string text = line.substr(tab + 1);
    if (text.empty()) throw DataError(where + ": empty text");
    RawExample ex;
    ex.label = parse_label_field(field, schema, where);
    ex.text = std::move(text);
    out.push_back(std::move(ex));
  }
  return out;
}

void write_delimited(const std::string& path,
                     const std::vector<RawExample>& examples,
                     const LabelSchema& schema) {
  std::ofstream outf(path, std::ios::binary);
  if (!outf) throw DataError("cannot write dataset file: " + path);
  for (const RawExample& ex : examples) {
    if (ex.text.find('\n') != std::string::npos)
      throw InvalidInput("dataset text must not contain newlines");
    if (schema.kind == LabelKind::Multilabel) {
      bool first = true;
      for (std::size_t i = 0; i < ex.label.bits.size(); ++i)
        if (ex.label.bits[i]) {
          if (!first) outf << ',';
          outf << schema.labels[i];
          first = false;
        }
    } else {
      outf << schema.labels[ex.label.index];
    }
    outf << '\t' << ex.text << '\n';
  }
}

SplitDataset split_8_2(std::vector<Example> examples, std::uint64_t seed) {
  if (examples.size() < 5)
    throw InvalidInput("split_8_2: at least 5 examples required");
  Rng rng(seed);
  rng.shuffle(examples);
  const std::size_t n_train =
      static_cast<std::size_t>(std::floor(0.8 * static_cast<double>(examples.size())));
  SplitDataset s;
  s.seed = seed;
  s.train.assign(examples.begin(), examples.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.test.assign(examples.begin() + static_cast<std::ptrdiff_t>(n_train), examples.end());
  return s;
}

Dataset build_dataset(const std::vector<RawExample>& raw,
                      const LabelSchema& schema, std::uint64_t seed,
                      std::size_t min_count) {
  schema.validate();
  std::vector<Example> examples;
  examples.reserve(raw.size());
  for (const RawExample& r : raw) {
    Example ex;
    ex.text = r.text;
    ex.label = r.label;
    examples.push_back(std::move(ex));
  }
  Dataset d;
  d.schema = schema;
  d.split = split_8_2(std::move(examples), seed);

  std::vector<std::vector<std::string>> train_tokens;
  train_tokens.reserve(d.split.train.size());
  for (const Example& ex : d.split.train) train_tokens.push_back(tokenize(ex.text));
  d.vocab = Vocabulary::build(train_tokens, min_count);

  for (std::size_t i = 0; i < d.split.train.size(); ++i) {
    d.split.train[i].tokens.clear();
    for (const std::string& t : train_tokens[i])
      d.split.train[i].tokens.push_back(d.vocab.id(t));
  }
  for (Example& ex : d.split.test) {
    ex.tokens.clear();
    for (const std::string& t : tokenize(ex.text))
      ex.tokens.push_back(d.vocab.id(t));
  }
  return d;
}

Dataset build_dataset_with_vocab(const std::vector<RawExample>& raw,
                                 const LabelSchema& schema, std::uint64_t seed,
                                 Vocabulary vocab) {
  schema.validate();
  std::vector<Example> examples;
  examples.reserve(raw.size());
  for (const RawExample& r : raw) {
    Example ex;
    ex.text = r.text;
    ex.label = r.label;
    examples.push_back(std::move(ex));
  }
  Dataset d;
  d.schema = schema;
  d.vocab = std::move(vocab);
  d.split = split_8_2(std::move(examples), seed);
  const auto encode = [&](Example& ex) {
    ex.tokens.clear();
    for (const std::string& t : tokenize(ex.text))
      ex.tokens.push_back(d.vocab.id(t));
  };
  for (Example& ex : d.split.train) encode(ex);
  for (Example& ex : d.split.test) encode(ex);
  return d;
}

std::vector<std::vector<int>> padded_tokens(const Batch& batch,
                                            std::size_t min_len) {
  std::size_t longest = std::max<std::size_t>(min_len, 1);
  for (const Example* ex : batch.items)
    longest = std::max(longest, ex->tokens.size());
  std::vector<std::vector<int>> out;
  out.reserve(batch.items.size());
  for (const Example* ex : batch.items) {
    std::vector<int> row = ex->tokens;
    row.resize(longest, Vocabulary::kPad);
    out.push_back(std::move(row));
  }
  return out;
}

BatchStream::BatchStream(const std::vector<Example>& examples,
                         std::size_t batch_size, Rng rng, bool drop_last)
    : examples_(&examples),
      batch_size_(batch_size),
      drop_last_(drop_last),
      base_rng_(rng),
      sample_rng_(rng.fork("sample")) {
  if (batch_size_ == 0) throw InvalidInput("batch size must be >= 1");
  if (examples.empty()) throw InvalidInput("cannot batch an empty dataset");
}

std::vector<Batch> BatchStream::epoch(std::size_t epoch_index) const {
  std::vector<std::size_t> order(examples_->size());
  std::iota(order.begin(), order.end(), 0);
  Rng r = base_rng_.fork("epoch/" + std::to_string(epoch_index));
  r.shuffle(order);
  std::vector<Batch> batches;
  for (std::size_t i = 0; i < order.size(); i += batch_size_) {
    const std::size_t end = std::min(order.size(), i + batch_size_);
    if (drop_last_ && end - i < batch_size_) break;
    Batch b;
    for (std::size_t k = i; k < end; ++k)
      b.items.push_back(&(*examples_)[order[k]]);
    batches.push_back(std::move(b));
  }
  return batches;
}

std::size_t BatchStream::batches_per_epoch() const {
  const std::size_t n = examples_->size();
  return drop_last_ ? n / batch_size_ : (n + batch_size_ - 1) / batch_size_;
}

Batch BatchStream::next_cycled() {
  if (cycle_pos_ >= cycle_batches_.size()) {
    cycle_batches_ = epoch(cycle_epoch_++);
    cycle_pos_ = 0;
  }
  return cycle_batches_[cycle_pos_++];
}

Batch BatchStream::sample() {
  Batch b;
  for (std::size_t i = 0; i < batch_size_; ++i) {
    const std::size_t j = static_cast<std::size_t>(sample_rng_.below(examples_->size()));
    b.items.push_back(&(*examples_)[j]);
  }
  return b;
}

namespace {

std::string pool_token(const char* prefix, std::size_t pool, std::size_t k) {
  std::ostringstream os;
  os << prefix << pool << "x" << k;
  return os.str();
}

}  // namespace

SynthPair synth_paired_tasks(const SynthConfig& cfg) {
  if (!(cfg.rho >= 0.0 && cfg.rho <= 1.0))
    throw InvalidInput("synth: rho must lie in [0, 1]");
  if (cfg.vocab_size < 120)
    throw InvalidInput("synth: vocab size must be at least 120");
  if (cfg.min_tokens < 4 || cfg.max_tokens < cfg.min_tokens)
    throw InvalidInput("synth: bad token length range");

  SynthPair out;
  out.personality_schema = LabelSchema::personality();
  out.emotion_schema = LabelSchema::tec();
  const std::size_t n_traits = out.personality_schema.count();
  const std::size_t n_classes = out.emotion_schema.count();

  // Token pools. Affect pools are shared surface vocabulary between the
  // two corpora; the remainder of the vocabulary is class markers, trait
  // markers and background noise.
  const std::size_t affect_pool = 12;   // per polarity
  const std::size_t trait_pool = 8;     // per non-coupled trait
  const std::size_t class_pool = 8;     // per emotion class
  std::vector<std::string> pos_tokens, neg_tokens;
  for (std::size_t k = 0; k < affect_pool; ++k) {
    pos_tokens.push_back(pool_token("pa", 0, k));
    neg_tokens.push_back(pool_token("na", 0, k));
  }
  std::vector<std::vector<std::string>> trait_tokens(n_traits);
  for (std::size_t j = 1; j < n_traits; ++j)
    for (std::size_t k = 0; k < trait_pool; ++k)
      trait_tokens[j].push_back(pool_token("tr", j, k));
  std::vector<std::vector<std::string>> class_tokens(n_classes);
  for (std::size_t c = 0; c < n_classes; ++c)
    for (std::size_t k = 0; k < class_pool; ++k)
      class_tokens[c].push_back(pool_token("cl", c, k));
  const std::size_t reserved =
      2 * affect_pool + (n_traits - 1) * trait_pool + n_classes * class_pool;
  std::vector<std::string> noise_tokens;
  for (std::size_t k = 0; k < cfg.vocab_size - reserved; ++k)
    noise_tokens.push_back(pool_token("wd", 0, k));

  // Positive-affect classes in the TEC schema: joy, surprise.
  const std::vector<std::size_t> positive_classes = {0, 3};
  const std::vector<std::size_t> negative_classes = {1, 2, 4, 5};

  Rng root(cfg.seed);
  Rng rng_p = root.fork("synth/personality");
  Rng rng_e = root.fork("synth/emotion");

  const auto pick = [](Rng& r, const std::vector<std::string>& pool) {
    return pool[static_cast<std::size_t>(r.below(pool.size()))];
  };
  const auto join = [](const std::vector<std::string>& toks) {
    std::string s;
    for (std::size_t i = 0; i < toks.size(); ++i) {
      if (i) s += ' ';
      s += toks[i];
    }
    return s;
  };

  for (std::size_t i = 0; i < cfg.n_per_task; ++i) {
    const bool affect = rng_p.bernoulli(0.5);
    RawExample ex;
    ex.label.bits.assign(n_traits, 0);
    // Coupled trait: copies the affect with probability rho, otherwise an
    // independent fair coin.
    ex.label.bits[0] = rng_p.bernoulli(cfg.rho) ? (affect ? 1 : 0)
                                                : (rng_p.bernoulli(0.5) ? 1 : 0);
    for (std::size_t j = 1; j < n_traits; ++j)
      ex.label.bits[j] = rng_p.bernoulli(0.5) ? 1 : 0;

    std::vector<std::string> toks;
    if (rng_p.bernoulli(cfg.marker_keep_prob))
      toks.push_back(pick(rng_p, affect ? pos_tokens : neg_tokens));
    for (std::size_t j = 1; j < n_traits; ++j)
      if (ex.label.bits[j] && rng_p.bernoulli(cfg.marker_keep_prob))
        toks.push_back(pick(rng_p, trait_tokens[j]));
    const std::size_t len =
        cfg.min_tokens + static_cast<std::size_t>(
                             rng_p.below(cfg.max_tokens - cfg.min_tokens + 1));
    while (toks.size() < len) toks.push_back(pick(rng_p, noise_tokens));
    rng_p.shuffle(toks);
    ex.text = join(toks);
    out.personality.push_back(std::move(ex));
  }

  for (std::size_t i = 0; i < cfg.n_per_task; ++i) {
    const bool affect = rng_e.bernoulli(0.5);
    const auto& classes = affect ? positive_classes : negative_classes;
    RawExample ex;
    ex.label.index = classes[static_cast<std::size_t>(rng_e.below(classes.size()))];

    std::vector<std::string> toks;
    if (rng_e.bernoulli(cfg.marker_keep_prob))
      toks.push_back(pick(rng_e, class_tokens[ex.label.index]));
    if (rng_e.bernoulli(cfg.marker_keep_prob))
      toks.push_back(pick(rng_e, affect ? pos_tokens : neg_tokens));
    const std::size_t len =
        cfg.min_tokens + static_cast<std::size_t>(
                             rng_e.below(cfg.max_tokens - cfg.min_tokens + 1));
    while (toks.size() < len) toks.push_back(pick(rng_e, noise_tokens));
    rng_e.shuffle(toks);
    ex.text = join(toks);
    out.emotion.push_back(std::move(ex));
  }
  return out;
}

}  // namespace gmtl
