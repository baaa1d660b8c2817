#include <array>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "gmtl/objectives.hpp"
#include "gmtl/rng.hpp"

using namespace gmtl;

namespace {

double eval_mlsm(const std::vector<double>& logits, const std::vector<int>& y) {
  Tape t;
  const NodeId z = t.leaf(Tensor({logits.size()}, std::vector<double>(logits)));
  return t.value(multilabel_soft_margin(t, z, y)).at(0);
}

double eval_ce(const std::vector<double>& logits, std::size_t target) {
  Tape t;
  const NodeId z = t.leaf(Tensor({logits.size()}, std::vector<double>(logits)));
  return t.value(cross_entropy(t, z, target)).at(0);
}

// Independent oracle: elementwise binary cross entropy on probabilities,
// evaluated in extended precision without the log-sigmoid identities.
double bce_oracle(const std::vector<double>& logits, const std::vector<int>& y) {
  long double sum = 0.0L;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const long double p = 1.0L / (1.0L + std::exp(-(long double)logits[i]));
    sum += y[i] ? std::log(p) : std::log(1.0L - p);
  }
  return static_cast<double>(-sum / static_cast<long double>(logits.size()));
}

// Brute-force softmax cross entropy without the log-sum-exp rearrangement.
double ce_oracle(const std::vector<double>& logits, std::size_t target) {
  long double z = 0.0L;
  for (double v : logits) z += std::exp((long double)v);
  return static_cast<double>(-std::log(std::exp((long double)logits[target]) / z));
}

}  // namespace

TEST_CASE("multilabel soft margin point values") {
  CHECK(eval_mlsm({0, 0, 0, 0, 0}, {1, 0, 1, 0, 1}) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(eval_mlsm({20}, {1}) == doctest::Approx(2.0611536e-9).epsilon(1e-3));
  CHECK(eval_mlsm({20}, {1}) == doctest::Approx(-std::log(1.0 / (1.0 + std::exp(-20.0)))));
}

TEST_CASE("multilabel soft margin equals the elementwise BCE oracle") {
  Rng rng(11);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t C = 1 + static_cast<std::size_t>(rng.below(6));
    std::vector<double> z;
    std::vector<int> y;
    for (std::size_t i = 0; i < C; ++i) {
      z.push_back(rng.uniform(-12.0, 12.0));
      y.push_back(rng.bernoulli(0.5) ? 1 : 0);
    }
    CHECK(std::fabs(eval_mlsm(z, y) - bce_oracle(z, y)) < 1e-10);
  }
}

TEST_CASE("multilabel soft margin input validation and stability") {
  Tape t;
  const NodeId z = t.leaf(Tensor::row({1, 2}));
  CHECK_THROWS_AS(multilabel_soft_margin(t, z, {1, 2}), InvalidInput);
  CHECK_THROWS_AS(multilabel_soft_margin(t, z, {1}), InvalidInput);
  // no NaN/Inf up to |logit| = 500
  CHECK(std::isfinite(eval_mlsm({500, -500}, {0, 1})));
  CHECK(std::isfinite(eval_mlsm({500, -500}, {1, 0})));
}

TEST_CASE("cross entropy point values and oracle agreement") {
  CHECK(eval_ce({1, 1, 1, 1, 1, 1, 1}, 3) ==
        doctest::Approx(std::log(7.0)).epsilon(1e-12));
  CHECK(eval_ce({30, 0, 0}, 0) == doctest::Approx(0.0).epsilon(1e-10));

  Rng rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> z;
    for (int i = 0; i < 6; ++i) z.push_back(rng.uniform(-8.0, 8.0));
    const std::size_t target = static_cast<std::size_t>(rng.below(6));
    CHECK(std::fabs(eval_ce(z, target) - ce_oracle(z, target)) < 1e-10);
  }
  CHECK(std::isfinite(eval_ce({500, -500, 0}, 1)));

  Tape t;
  const NodeId z = t.leaf(Tensor::row({1, 2}));
  CHECK_THROWS_AS(cross_entropy(t, z, 2), InvalidInput);
}

TEST_CASE("losses are non-negative and differentiable") {
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> z;
    std::vector<int> y;
    for (int i = 0; i < 4; ++i) {
      z.push_back(rng.uniform(-30.0, 30.0));
      y.push_back(rng.bernoulli(0.5) ? 1 : 0);
    }
    CHECK(eval_mlsm(z, y) >= 0.0);
    CHECK(eval_ce(z, static_cast<std::size_t>(rng.below(4))) >= 0.0);
  }

  // gradient soundness of both losses
  Tensor z({3}, {0.4, -1.1, 2.2});
  std::array<Tensor*, 1> params{&z};
  const std::vector<int> y{1, 0, 1};
  const LossFn ml = [&](std::vector<Tensor>* grads) {
    Tape t;
    const NodeId zn = t.leaf(z);
    const NodeId loss = multilabel_soft_margin(t, zn, y);
    if (grads) {
      t.backward(loss);
      *grads = {t.grad(zn)};
    }
    return t.value(loss).at(0);
  };
  CHECK(grad_check(params, ml) < 1e-6);
  const LossFn ce = [&](std::vector<Tensor>* grads) {
    Tape t;
    const NodeId zn = t.leaf(z);
    const NodeId loss = cross_entropy(t, zn, 1);
    if (grads) {
      t.backward(loss);
      *grads = {t.grad(zn)};
    }
    return t.value(loss).at(0);
  };
  CHECK(grad_check(params, ce) < 1e-6);
}

TEST_CASE("joint loss adds the parts and keeps them") {
  {
    Tape t;
    JointLossValue v;
    const NodeId total = joint_loss(t, t.leaf(Tensor::scalar(0.7)),
                                    t.leaf(Tensor::scalar(1.9)), &v);
    CHECK(t.value(total).at(0) == doctest::Approx(2.6).epsilon(1e-15));
    CHECK(v.personality == 0.7);
    CHECK(v.emotion == 1.9);
    CHECK(std::fabs(v.total - (v.personality + v.emotion)) < 1e-12);
  }
  {
    Tape t;
    const NodeId total =
        joint_loss(t, t.leaf(Tensor::scalar(3.25)), t.leaf(Tensor::scalar(0.0)));
    CHECK(t.value(total).at(0) == 3.25);
  }
  {
    // d(total) = d(p-part) + d(e-part)
    Tensor a = Tensor::scalar(1.0), b = Tensor::scalar(2.0);
    std::array<Tensor*, 2> params{&a, &b};
    const LossFn fn = [&](std::vector<Tensor>* grads) {
      Tape t;
      const NodeId an = t.leaf(a);
      const NodeId bn = t.leaf(b);
      const NodeId total = joint_loss(t, t.mul(an, an), t.mul(bn, bn));
      if (grads) {
        t.backward(total);
        *grads = {t.grad(an), t.grad(bn)};
      }
      return t.value(total).at(0);
    };
    CHECK(grad_check(params, fn) < 1e-6);
  }
}

TEST_CASE("decode_multilabel threshold rule") {
  CHECK(decode_multilabel(Tensor::row({-1, 0.2, 0, 3, -0.5})) ==
        std::vector<int>{0, 1, 0, 1, 0});
  CHECK(decode_multilabel(Tensor::row({0, 0, 0})) == std::vector<int>{0, 0, 0});

  // threshold 0.5 on probabilities == sign rule on logits
  Rng rng(23);
  for (int trial = 0; trial < 500; ++trial) {
    const double z = rng.uniform(-15.0, 15.0);
    const int via_prob = decode_multilabel(Tensor::row({z}))[0];
    const int via_sign = z > 0.0 ? 1 : 0;
    CHECK(via_prob == via_sign);
  }
}

TEST_CASE("decode_argmax first maximum") {
  CHECK(decode_argmax(Tensor::row({2, 5, 5})) == 1);
  CHECK(decode_argmax(Tensor::row({7})) == 0);
  Rng rng(29);
  for (int trial = 0; trial < 200; ++trial) {
    Tensor z({6});
    for (std::size_t i = 0; i < 6; ++i) z.at(i) = rng.uniform(-4.0, 4.0);
    std::size_t brute = 0;
    for (std::size_t i = 0; i < 6; ++i)
      if (z.at(i) > z.at(brute)) brute = i;
    CHECK(decode_argmax(z) == brute);
  }
}

TEST_CASE("metrics_multilabel hand-counted example") {
  const std::vector<std::vector<int>> preds{{1, 0}, {1, 1}, {0, 0}};
  const std::vector<std::vector<int>> golds{{1, 1}, {1, 0}, {0, 0}};
  const MultilabelMetrics m = metrics_multilabel(preds, golds);
  CHECK(m.micro.tp == 2);
  CHECK(m.micro.fp == 1);
  CHECK(m.micro.fn == 1);
  CHECK(m.micro.tn == 2);
  CHECK(m.precision == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(m.recall == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(m.f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(m.accuracy == doctest::Approx(4.0 / 6.0).epsilon(1e-15));
}

TEST_CASE("metrics_multilabel edge cases") {
  {
    const std::vector<std::vector<int>> same{{1, 0, 1}, {0, 1, 1}};
    const MultilabelMetrics m = metrics_multilabel(same, same);
    CHECK(m.accuracy == 1.0);
    CHECK(m.precision == 1.0);
    CHECK(m.recall == 1.0);
    CHECK(m.f1 == 1.0);
    CHECK(m.subset_accuracy == 1.0);
  }
  {
    const std::vector<std::vector<int>> preds{{0, 0}, {0, 0}};
    const std::vector<std::vector<int>> golds{{1, 1}, {1, 1}};
    const MultilabelMetrics m = metrics_multilabel(preds, golds);
    CHECK(m.accuracy == 0.0);
    CHECK(m.precision == 0.0);
    CHECK(m.precision_zero_den);  // no positive predictions at all
    CHECK(m.recall == 0.0);
    CHECK(m.f1 == 0.0);
  }
  CHECK_THROWS_AS(metrics_multilabel({{1, 0}}, {{1, 0}, {0, 0}}), InvalidInput);
  CHECK_THROWS_AS(metrics_multilabel({{1, 0}}, {{1}}), InvalidInput);
}

TEST_CASE("micro metrics are order independent") {
  Rng rng(31);
  std::vector<std::vector<int>> preds, golds;
  for (int i = 0; i < 12; ++i) {
    preds.push_back({rng.bernoulli(0.5), rng.bernoulli(0.4), rng.bernoulli(0.6)});
    golds.push_back({rng.bernoulli(0.5), rng.bernoulli(0.5), rng.bernoulli(0.5)});
  }
  const MultilabelMetrics before = metrics_multilabel(preds, golds);
  std::vector<std::size_t> order{7, 2, 9, 0, 11, 4, 1, 10, 3, 8, 5, 6};
  std::vector<std::vector<int>> p2, g2;
  for (std::size_t i : order) {
    p2.push_back(preds[i]);
    g2.push_back(golds[i]);
  }
  const MultilabelMetrics after = metrics_multilabel(p2, g2);
  CHECK(before.accuracy == after.accuracy);
  CHECK(before.precision == after.precision);
  CHECK(before.recall == after.recall);
  CHECK(before.f1 == after.f1);
}

TEST_CASE("accuracy_multiclass") {
  CHECK(accuracy_multiclass({1, 2, 3}, {1, 2, 3}) == 1.0);
  CHECK(accuracy_multiclass({1, 2, 3}, {4, 5, 6}) == 0.0);
  CHECK(accuracy_multiclass({0, 1, 1}, {0, 1, 2}) ==
        doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK_THROWS_AS(accuracy_multiclass({1}, {1, 2}), InvalidInput);
}

TEST_CASE("metrics serialize to kv and a csv row") {
  const std::vector<std::vector<int>> preds{{1, 0}, {0, 1}};
  const MultilabelMetrics m = metrics_multilabel(preds, preds);
  const std::string kv = metrics_kv(m, 0.75);
  CHECK(kv.find("p_f1=1") != std::string::npos);
  CHECK(kv.find("e_accuracy=0.75") != std::string::npos);
  const std::string header = metrics_csv_header();
  const std::string row = metrics_csv_row(m, 0.75);
  CHECK(std::count(header.begin(), header.end(), ',') ==
        std::count(row.begin(), row.end(), ','));
}
