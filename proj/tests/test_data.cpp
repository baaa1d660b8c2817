#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include "doctest.h"
#include "gmtl/data.hpp"

using namespace gmtl;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("tokenize") {
  CHECK(tokenize("Damn you's a sexy bitch") ==
        std::vector<std::string>{"damn", "you's", "a", "sexy", "bitch"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("HELLO!!!") == std::vector<std::string>{"hello"});
  CHECK(tokenize("  spaced\tout\nlines ") ==
        std::vector<std::string>{"spaced", "out", "lines"});
  CHECK(tokenize("'quoted'") == std::vector<std::string>{"quoted"});
  CHECK(tokenize("!!! ???").empty());
  // NBSP (U+00A0) and ideographic space (U+3000) split tokens
  CHECK(tokenize("a\xC2\xA0m\xE3\x80\x80z") ==
        std::vector<std::string>{"a", "m", "z"});
}

TEST_CASE("load_delimited parses lines against the schema") {
  const std::string path = temp_path("gmtl_load_test.tsv");
  {
    std::ofstream f(path);
    f << "# comment line\n";
    f << "joy\tI passed the exam\n";
    f << "anger\tslow trains again\n";
  }
  const auto rows = load_delimited(path, LabelSchema::isear());
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].label.index == 3);  // joy in the isear ordering
  CHECK(rows[0].text == "I passed the exam");
  CHECK(rows[1].label.index == 0);
  std::filesystem::remove(path);
}

TEST_CASE("load_delimited multilabel bit vectors") {
  const std::string path = temp_path("gmtl_load_ml.tsv");
  {
    std::ofstream f(path);
    f << "openness,neuroticism\tIs still awake at 3:30\n";
    f << "\tno traits set here\n";
  }
  const auto rows = load_delimited(path, LabelSchema::personality());
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].label.bits == std::vector<int>{1, 0, 0, 0, 1});
  CHECK(rows[1].label.bits == std::vector<int>{0, 0, 0, 0, 0});
  std::filesystem::remove(path);
}

TEST_CASE("load_delimited errors carry line numbers") {
  const std::string path = temp_path("gmtl_load_err.tsv");
  {
    std::ofstream f(path);
    f << "joy\tfine\n";
    f << "serenity\tnot a tec label\n";
  }
  try {
    load_delimited(path, LabelSchema::tec());
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find(":2") != std::string::npos);
    CHECK(msg.find("serenity") != std::string::npos);
  }
  {
    std::ofstream f(path);
    f << "joy\t\n";
  }
  CHECK_THROWS_AS(load_delimited(path, LabelSchema::tec()), DataError);
  CHECK_THROWS_AS(load_delimited(temp_path("gmtl_no_such_file.tsv"),
                                 LabelSchema::tec()),
                  DataError);
  std::filesystem::remove(path);
}

TEST_CASE("dataset round trip") {
  const SynthConfig cfg{.n_per_task = 40, .vocab_size = 150, .rho = 0.5, .seed = 9};
  const SynthPair pair = synth_paired_tasks(cfg);
  const std::string path = temp_path("gmtl_roundtrip.tsv");

  write_delimited(path, pair.personality, pair.personality_schema);
  const auto back = load_delimited(path, pair.personality_schema);
  REQUIRE(back.size() == pair.personality.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].text == pair.personality[i].text);
    CHECK(back[i].label.bits == pair.personality[i].label.bits);
  }

  write_delimited(path, pair.emotion, pair.emotion_schema);
  const auto back_e = load_delimited(path, pair.emotion_schema);
  REQUIRE(back_e.size() == pair.emotion.size());
  for (std::size_t i = 0; i < back_e.size(); ++i) {
    CHECK(back_e[i].text == pair.emotion[i].text);
    CHECK(back_e[i].label.index == pair.emotion[i].label.index);
  }
  std::filesystem::remove(path);
}

TEST_CASE("split_8_2 sizes, determinism, disjointness") {
  std::vector<Example> ex;
  for (int i = 0; i < 10; ++i)
    ex.push_back({{}, "text " + std::to_string(i), {}});
  const SplitDataset s = split_8_2(ex, 5);
  CHECK(s.train.size() == 8);
  CHECK(s.test.size() == 2);

  const SplitDataset s2 = split_8_2(ex, 5);
  for (std::size_t i = 0; i < s.train.size(); ++i)
    CHECK(s.train[i].text == s2.train[i].text);
  for (std::size_t i = 0; i < s.test.size(); ++i)
    CHECK(s.test[i].text == s2.test[i].text);

  std::set<std::string> train_texts, test_texts;
  for (const Example& e : s.train) train_texts.insert(e.text);
  for (const Example& e : s.test) test_texts.insert(e.text);
  for (const std::string& t : test_texts) CHECK(train_texts.count(t) == 0);
  CHECK(train_texts.size() + test_texts.size() == 10);

  std::vector<Example> four(4);
  CHECK_THROWS_AS(split_8_2(four, 1), InvalidInput);
}

TEST_CASE("split_8_2 at the isear dataset size") {
  std::vector<Example> ex(7666);
  const SplitDataset s = split_8_2(ex, 123);
  CHECK(s.train.size() == 6132);
  CHECK(s.test.size() == 1534);
}

TEST_CASE("vocabulary is built from the train split only") {
  std::vector<RawExample> raw;
  for (int i = 0; i < 20; ++i) {
    RawExample r;
    r.text = "common tok" + std::to_string(i);
    r.label.index = 0;
    raw.push_back(r);
  }
  LabelSchema schema{LabelKind::Multiclass, {"only"}};
  const Dataset d = build_dataset(raw, schema, 7);
  CHECK(d.vocab.id("common") >= 2);
  // every test-split-only token maps to unknown
  std::set<std::string> train_tokens;
  for (const Example& e : d.split.train)
    for (const std::string& t : tokenize(e.text)) train_tokens.insert(t);
  for (const Example& e : d.split.test)
    for (const std::string& t : tokenize(e.text))
      if (!train_tokens.count(t)) CHECK(d.vocab.id(t) == Vocabulary::kUnk);
  // encoded ids agree with the vocabulary
  for (const Example& e : d.split.train) {
    const auto toks = tokenize(e.text);
    REQUIRE(e.tokens.size() == toks.size());
    for (std::size_t i = 0; i < toks.size(); ++i)
      CHECK(e.tokens[i] == d.vocab.id(toks[i]));
  }
}

TEST_CASE("batches cover the data with seeded permutations") {
  std::vector<Example> ex(10);
  for (int i = 0; i < 10; ++i) ex[static_cast<std::size_t>(i)].label.index = static_cast<std::size_t>(i);

  BatchStream s(ex, 4, Rng(3));
  const auto batches = s.epoch(0);
  REQUIRE(batches.size() == 3);
  CHECK(batches[0].size() == 4);
  CHECK(batches[1].size() == 4);
  CHECK(batches[2].size() == 2);
  std::set<std::size_t> seen;
  for (const Batch& b : batches)
    for (const Example* e : b.items) seen.insert(e->label.index);
  CHECK(seen.size() == 10);

  BatchStream dropper(ex, 4, Rng(3), true);
  CHECK(dropper.epoch(0).size() == 2);

  // same seed, same permutation; different epochs differ
  BatchStream s2(ex, 4, Rng(3));
  CHECK(s2.epoch(0)[0].items[0]->label.index ==
        batches[0].items[0]->label.index);
  CHECK(s.epoch(1)[0].items[0] != nullptr);
}

TEST_CASE("sample draws are reproducible") {
  std::vector<Example> ex(25);
  BatchStream a(ex, 5, Rng(77));
  BatchStream b(ex, 5, Rng(77));
  for (int i = 0; i < 6; ++i) {
    const Batch ba = a.sample();
    const Batch bb = b.sample();
    REQUIRE(ba.size() == 5);
    for (std::size_t k = 0; k < 5; ++k) CHECK(ba.items[k] == bb.items[k]);
  }
  // consecutive draws differ (with overwhelming probability for n=25)
  BatchStream c(ex, 5, Rng(78));
  const Batch d1 = c.sample();
  const Batch d2 = c.sample();
  bool any_diff = false;
  for (std::size_t k = 0; k < 5; ++k)
    if (d1.items[k] != d2.items[k]) any_diff = true;
  CHECK(any_diff);
}

TEST_CASE("padded_tokens pads to the max and the filter floor") {
  std::vector<Example> ex(2);
  ex[0].tokens = {5, 6, 7};
  ex[1].tokens = {8};
  Batch b;
  b.items = {&ex[0], &ex[1]};
  const auto rows = padded_tokens(b, 5);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == std::vector<int>{5, 6, 7, 0, 0});
  CHECK(rows[1] == std::vector<int>{8, 0, 0, 0, 0});
  const auto rows2 = padded_tokens(b, 2);
  CHECK(rows2[0].size() == 3);
  CHECK(rows2[1] == std::vector<int>{8, 0, 0});
}

TEST_CASE("synthetic generator honors the coupling parameter") {
  SynthConfig cfg;
  cfg.n_per_task = 2000;
  cfg.vocab_size = 300;
  cfg.seed = 42;

  // rho = 1: the coupled bit is a deterministic function of the affect,
  // and the affect is observable through which marker pool the text uses.
  cfg.rho = 1.0;
  const SynthPair hard = synth_paired_tasks(cfg);
  std::size_t checked = 0;
  for (const RawExample& ex : hard.personality) {
    const bool has_pos = ex.text.find("pa0x") != std::string::npos;
    const bool has_neg = ex.text.find("na0x") != std::string::npos;
    if (has_pos == has_neg) continue;  // marker dropped, affect unobservable
    CHECK(ex.label.bits[0] == (has_pos ? 1 : 0));
    ++checked;
  }
  CHECK(checked > 1000);

  // rho = 0.8 with this construction: P(bit = affect) = rho + (1-rho)/2 = 0.9
  cfg.rho = 0.8;
  const SynthPair mid = synth_paired_tasks(cfg);
  std::size_t agree = 0, observable = 0;
  for (const RawExample& ex : mid.personality) {
    const bool has_pos = ex.text.find("pa0x") != std::string::npos;
    const bool has_neg = ex.text.find("na0x") != std::string::npos;
    if (has_pos == has_neg) continue;
    ++observable;
    if (ex.label.bits[0] == (has_pos ? 1 : 0)) ++agree;
  }
  const double rate = static_cast<double>(agree) / static_cast<double>(observable);
  CHECK(rate == doctest::Approx(0.9).epsilon(0.035));

  // rho = 0: the coupled bit is an independent fair coin; empirical mutual
  // information between bit and affect stays at estimator-noise level.
  cfg.rho = 0.0;
  const SynthPair off = synth_paired_tasks(cfg);
  std::size_t n11 = 0, n10 = 0, n01 = 0, n00 = 0;
  for (const RawExample& ex : off.personality) {
    const bool has_pos = ex.text.find("pa0x") != std::string::npos;
    const bool has_neg = ex.text.find("na0x") != std::string::npos;
    if (has_pos == has_neg) continue;
    const bool bit = ex.label.bits[0] != 0;
    if (bit && has_pos) ++n11;
    else if (bit && !has_pos) ++n10;
    else if (!bit && has_pos) ++n01;
    else ++n00;
  }
  const double n = static_cast<double>(n11 + n10 + n01 + n00);
  double mi = 0.0;
  const double pb = (n11 + n10) / n, pa = (n11 + n01) / n;
  const auto term = [&](double joint, double px, double py) {
    if (joint <= 0.0) return 0.0;
    return joint / n * std::log2((joint / n) / (px * py));
  };
  mi += term(static_cast<double>(n11), pb, pa);
  mi += term(static_cast<double>(n10), pb, 1 - pa);
  mi += term(static_cast<double>(n01), 1 - pb, pa);
  mi += term(static_cast<double>(n00), 1 - pb, 1 - pa);
  CHECK(std::fabs(mi) < 0.005);  // bits; ~2000 samples of estimator noise

  CHECK_THROWS_AS(synth_paired_tasks({.n_per_task = 10, .vocab_size = 200,
                                      .rho = 1.5, .seed = 1}),
                  InvalidInput);
}

TEST_CASE("synthetic generator is deterministic") {
  SynthConfig cfg;
  cfg.n_per_task = 50;
  cfg.vocab_size = 150;
  cfg.seed = 5;
  const SynthPair a = synth_paired_tasks(cfg);
  const SynthPair b = synth_paired_tasks(cfg);
  REQUIRE(a.personality.size() == b.personality.size());
  for (std::size_t i = 0; i < a.personality.size(); ++i) {
    CHECK(a.personality[i].text == b.personality[i].text);
    CHECK(a.personality[i].label.bits == b.personality[i].label.bits);
  }
  for (std::size_t i = 0; i < a.emotion.size(); ++i) {
    CHECK(a.emotion[i].text == b.emotion[i].text);
    CHECK(a.emotion[i].label.index == b.emotion[i].label.index);
  }
}

TEST_CASE("every example satisfies its schema after the pipeline") {
  SynthConfig cfg;
  cfg.n_per_task = 60;
  cfg.vocab_size = 150;
  cfg.seed = 31;
  const SynthPair pair = synth_paired_tasks(cfg);
  const Dataset dp = build_dataset(pair.personality, pair.personality_schema, 31);
  const Dataset de = build_dataset(pair.emotion, pair.emotion_schema, 31);
  const auto check_p = [&](const Example& e) {
    CHECK(e.label.bits.size() == dp.schema.count());
    for (int b : e.label.bits) CHECK((b == 0 || b == 1));
  };
  for (const Example& e : dp.split.train) check_p(e);
  for (const Example& e : dp.split.test) check_p(e);
  for (const Example& e : de.split.train) CHECK(e.label.index < de.schema.count());
  for (const Example& e : de.split.test) CHECK(e.label.index < de.schema.count());
}
