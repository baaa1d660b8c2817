#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "gmtl/error.hpp"
#include "gmtl/rng.hpp"

namespace gmtl {

enum class LabelKind { Multilabel, Multiclass };

/// Ordered label set for one task. The order defines bit positions for
/// multilabel targets and class indexes for multiclass targets.
struct LabelSchema {
  LabelKind kind = LabelKind::Multiclass;
  std::vector<std::string> labels;

  std::size_t count() const { return labels.size(); }
  std::optional<std::size_t> index_of(std::string_view name) const;
  void validate() const;  // unique, non-empty names

  static LabelSchema personality();  // Big Five traits, multilabel
  static LabelSchema isear();        // 7 emotions, multiclass
  static LabelSchema tec();          // 6 emotions, multiclass
};

/// Target payload: `bits` for multilabel schemas, `index` for multiclass.
struct Label {
  std::vector<int> bits;
  std::size_t index = 0;
};

struct RawExample {
  std::string text;
  Label label;
};

struct Example {
  std::vector<int> tokens;
  std::string text;
  Label label;
};

/// Token ids dense from 0; id 0 is the pad token, id 1 the unknown token.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;

  Vocabulary();

  /// Builds from tokenized texts in order of first appearance, keeping
  /// tokens seen at least `min_count` times.
  static Vocabulary build(const std::vector<std::vector<std::string>>& texts,
                          std::size_t min_count = 1);

  int id(std::string_view token) const;  // kUnk when absent
  const std::string& token(std::size_t id) const { return id_to_token_[id]; }
  std::size_t size() const { return id_to_token_.size(); }
  const std::vector<std::string>& tokens() const { return id_to_token_; }

  /// Rebuild from a saved token list (checkpoint restore).
  static Vocabulary from_tokens(std::vector<std::string> tokens);

 private:
  std::unordered_map<std::string, int> token_to_id_;
  std::vector<std::string> id_to_token_;
};

struct SplitDataset {
  std::vector<Example> train;
  std::vector<Example> test;
  std::uint64_t seed = 0;
};

/// One task's data: schema + vocabulary (train split only) + 8:2 split.
struct Dataset {
  LabelSchema schema;
  Vocabulary vocab;
  SplitDataset split;
};

/// Lowercases (ASCII), splits on Unicode whitespace and strips leading and
/// trailing ASCII punctuation from each token; interior characters,
/// apostrophes included, are preserved.
std::vector<std::string> tokenize(std::string_view text);

/// Reads `label-field<TAB>text` lines; `#`-prefixed lines are comments.
/// Multilabel label fields are comma-separated label names, multiclass a
/// single name. Errors carry the 1-based line number.
std::vector<RawExample> load_delimited(const std::string& path,
                                       const LabelSchema& schema);

/// Inverse of load_delimited, newline-free text required.
void write_delimited(const std::string& path,
                     const std::vector<RawExample>& examples,
                     const LabelSchema& schema);

/// Seeded shuffle, first floor(0.8 n) examples train, rest test.
SplitDataset split_8_2(std::vector<Example> examples, std::uint64_t seed);

/// Tokenize, split, build the vocabulary from the train split only, then
/// encode both splits (unseen test tokens map to the unknown id).
Dataset build_dataset(const std::vector<RawExample>& raw,
                      const LabelSchema& schema, std::uint64_t seed,
                      std::size_t min_count = 1);

/// Same split, but encodes with an existing vocabulary (checkpoint restore
/// path: token ids must match the ones the parameters were trained with).
Dataset build_dataset_with_vocab(const std::vector<RawExample>& raw,
                                 const LabelSchema& schema, std::uint64_t seed,
                                 Vocabulary vocab);

/// A batch borrows examples from its dataset.
struct Batch {
  std::vector<const Example*> items;
  std::size_t size() const { return items.size(); }
};

/// Pads every sequence in the batch with the pad id up to
/// max(longest sequence, min_len). min_len should be the largest filter
/// width so convolution preconditions always hold.
std::vector<std::vector<int>> padded_tokens(const Batch& batch,
                                            std::size_t min_len);

/// Epoch iteration (seeded permutation, split into consecutive batches)
/// plus uniform-with-replacement sampling for pseudo-k-shot draws.
class BatchStream {
 public:
  BatchStream(const std::vector<Example>& examples, std::size_t batch_size,
              Rng rng, bool drop_last = false);

  /// Deterministic function of (stream seed, epoch index).
  std::vector<Batch> epoch(std::size_t epoch_index) const;
  std::size_t batches_per_epoch() const;

  /// Next batch of the cycling iterator; rolls into a freshly permuted
  /// epoch when the current one is exhausted.
  Batch next_cycled();

  /// One batch of batch_size indices drawn uniformly with replacement.
  /// Advances the sampling stream.
  Batch sample();

 private:
  const std::vector<Example>* examples_;
  std::size_t batch_size_;
  bool drop_last_;
  Rng base_rng_;
  Rng sample_rng_;
  std::size_t cycle_epoch_ = 0;
  std::size_t cycle_pos_ = 0;
  std::vector<Batch> cycle_batches_;
};

/// Synthetic paired-corpus generator. A latent binary affect variable
/// drives the emotion class polarity and, with probability `rho`, the
/// first personality trait bit; with probability 1-rho that bit is an
/// independent fair coin, so rho=0 decouples the tasks entirely and
/// rho=1 ties the bit to the affect deterministically.
struct SynthConfig {
  std::size_t n_per_task = 2000;
  std::size_t vocab_size = 500;
  double rho = 0.8;
  std::uint64_t seed = 0;
  std::size_t min_tokens = 6;
  std::size_t max_tokens = 12;
  double marker_keep_prob = 0.85;  // trait/class markers survive with this prob
};

struct SynthPair {
  std::vector<RawExample> personality;
  std::vector<RawExample> emotion;
  LabelSchema personality_schema;
  LabelSchema emotion_schema;
};

SynthPair synth_paired_tasks(const SynthConfig& cfg);

}  // namespace gmtl
