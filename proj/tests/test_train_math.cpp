#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "mmtsm/model/fusion.hpp"
#include "mmtsm/score/metrics.hpp"
#include "mmtsm/train/loss.hpp"
#include "mmtsm/train/sgd.hpp"
#include "mmtsm/train/split.hpp"
#include "test_util.hpp"

using namespace mmtsm;
using testutil::rand_tensor;

TEST_CASE("logit fusion weights the modalities as declared") {
  FusionWeights w;
  w.gamma = 2.0;
  w.beta = 0.5;
  w.alpha = 0.25;
  CHECK(w[0] == 2.0);
  CHECK(w[1] == 0.5);
  CHECK(w[2] == 0.25);

  TensorR logits({2, 3, 2});
  const Real vals[] = {1, -2, 4, 0.5, -1, 8, 2, 2, -4, 1.5, 0, 16};
  for (int i = 0; i < 12; ++i) logits[i] = vals[i];
  const TensorR fused = fuse_logits(logits, w);
  CHECK(fused.at(0, 0) == 2.0 * 1 + 0.5 * 4 + 0.25 * -1);
  CHECK(fused.at(0, 1) == 2.0 * -2 + 0.5 * 0.5 + 0.25 * 8);
  CHECK(fused.at(1, 0) == 2.0 * 2 + 0.5 * -4 + 0.25 * 0);
  CHECK(fused.at(1, 1) == 2.0 * 2 + 0.5 * 1.5 + 0.25 * 16);

  CHECK_THROWS_AS(fuse_logits(rand_tensor({2, 3}, 1), w), std::invalid_argument);
  FusionWeights neg;
  neg.alpha = -0.1;
  CHECK_THROWS_AS(neg.validate(), std::invalid_argument);
  FusionWeights zero;
  zero.gamma = zero.beta = zero.alpha = 0;
  CHECK_THROWS_AS(zero.validate(), std::invalid_argument);
}

TEST_CASE("fusion backward is the adjoint of fusion forward") {
  std::mt19937_64 rng(290);
  for (int trial = 0; trial < 10; ++trial) {
    const TensorR logits = rand_tensor({3, 3, 5}, 290 + trial, -2, 2);
    const TensorR g = rand_tensor({3, 5}, 390 + trial, -2, 2);
    FusionWeights w;
    std::uniform_real_distribution<Real> uw(0.0, 2.0);
    w.gamma = uw(rng);
    w.beta = uw(rng);
    w.alpha = uw(rng) + 0.01;
    const TensorR fused = fuse_logits(logits, w);
    const TensorR back = fuse_logits_backward(g, 3, w);
    Real lhs = 0, rhs = 0;
    for (std::size_t i = 0; i < fused.numel(); ++i) lhs += fused[i] * g[i];
    for (std::size_t i = 0; i < logits.numel(); ++i) rhs += logits[i] * back[i];
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
}

TEST_CASE("fused cross-entropy agrees with an extended-precision oracle") {
  std::mt19937_64 rng(300);
  for (int trial = 0; trial < 100; ++trial) {
    std::uniform_int_distribution<int> ub(1, 4), uk(2, 7);
    const int b = ub(rng), k = uk(rng), m = 3;
    std::uniform_real_distribution<Real> ul(-5.0, 5.0), uw(0.0, 2.0);
    TensorR logits({b, m, k});
    for (std::size_t i = 0; i < logits.numel(); ++i) logits[i] = ul(rng);
    std::vector<int> labels(b);
    for (auto& l : labels) l = static_cast<int>(rng() % k);
    FusionWeights w;
    w.gamma = uw(rng);
    w.beta = uw(rng);
    w.alpha = uw(rng) + 0.01;

    long double total = 0;
    for (int i = 0; i < b; ++i) {
      std::vector<long double> fused(k, 0);
      for (int j = 0; j < m; ++j)
        for (int c = 0; c < k; ++c)
          fused[c] += static_cast<long double>(w[j]) * logits.at(i, j, c);
      long double sum = 0;
      for (int c = 0; c < k; ++c) sum += std::exp(fused[c]);
      total += std::log(sum) - fused[labels[i]];
    }
    const long double want = total / b;

    const LossResult res = fused_cross_entropy(logits, labels, w, false);
    CHECK(std::abs(res.value - static_cast<Real>(want)) <=
          1e-6 * std::max<Real>(1, std::abs(static_cast<Real>(want))));
    Real rowsum = 0;
    for (int c = 0; c < k; ++c) rowsum += res.probs.at(0, c);
    CHECK(rowsum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("uniform logits cost exactly log K") {
  for (int k : {2, 3, 6, 10}) {
    TensorR logits = TensorR::full({2, 3, k}, Real(0.7));
    const std::vector<int> labels = {0, k - 1};
    FusionWeights w;
    w.gamma = 1.3;
    w.beta = 0.4;
    w.alpha = 0.2;
    const LossResult res = fused_cross_entropy(logits, labels, w, false);
    CHECK(res.value == doctest::Approx(std::log(static_cast<Real>(k))).epsilon(1e-12));
  }
}

TEST_CASE("cross-entropy rejects bad shapes and labels") {
  FusionWeights w;
  CHECK_THROWS_AS(fused_cross_entropy(rand_tensor({2, 3}, 1), {0, 0}, w),
                  std::invalid_argument);
  CHECK_THROWS_AS(fused_cross_entropy(rand_tensor({2, 3, 4}, 1), {0}, w),
                  std::invalid_argument);
  CHECK_THROWS_AS(fused_cross_entropy(rand_tensor({2, 3, 4}, 1), {0, 4}, w),
                  std::invalid_argument);
  CHECK_THROWS_AS(fused_cross_entropy(rand_tensor({2, 3, 4}, 1), {0, -1}, w),
                  std::invalid_argument);
}

TEST_CASE("cross-entropy gradient matches finite differences") {
  TensorR logits = rand_tensor({2, 3, 4}, 305, -3, 3);
  const std::vector<int> labels = {1, 3};
  FusionWeights w;
  w.gamma = 1.1;
  w.beta = 0.7;
  w.alpha = 0.3;
  const LossResult res = fused_cross_entropy(logits, labels, w);
  REQUIRE(res.glogits.numel() == logits.numel());
  const Real eps = 1e-6;
  for (std::size_t i = 0; i < logits.numel(); ++i) {
    const Real save = logits[i];
    logits[i] = save + eps;
    const Real fp = fused_cross_entropy(logits, labels, w, false).value;
    logits[i] = save - eps;
    const Real fm = fused_cross_entropy(logits, labels, w, false).value;
    logits[i] = save;
    const Real fd = (fp - fm) / (2 * eps);
    CHECK(std::abs(fd - res.glogits[i]) <= 1e-5 * std::max(Real(1), std::abs(res.glogits[i])));
  }
}

TEST_CASE("gradient clipping reports the pre-clip norm and rescales globally") {
  TensorR a({2}), b({2}), ga({2}), gb({2}), buf({2});
  ga[0] = 3;
  ga[1] = 0;
  gb[0] = 0;
  gb[1] = 4;
  ParamRefs refs;
  add_param(refs, "a", a, ga);
  add_param(refs, "b", b, gb);
  add_buffer(refs, "buf", buf);

  CHECK(grad_clip(refs, 10.0) == 5.0);
  CHECK(ga[0] == 3.0);  // under the cap: untouched
  CHECK(gb[1] == 4.0);

  CHECK(grad_clip(refs, 2.5) == 5.0);
  CHECK(ga[0] == 1.5);
  CHECK(ga[1] == 0.0);
  CHECK(gb[0] == 0.0);
  CHECK(gb[1] == 2.0);
}

TEST_CASE("sgd replays the coupled-decay momentum recurrence") {
  TensorR theta({2}), grad({2});
  theta[0] = 1.0;
  theta[1] = 2.0;
  ParamRefs refs;
  add_param(refs, "w", theta, grad);
  const Real lr = 0.1, mu = 0.9, wd = 0.01;
  SgdOptimizer opt(lr, mu, wd);

  Real t[2] = {1.0, 2.0}, v[2] = {0, 0};
  const Real g1[2] = {0.5, -1.0}, g2[2] = {-0.2, 0.3};

  grad[0] = g1[0];
  grad[1] = g1[1];
  opt.step(refs);
  for (int i = 0; i < 2; ++i) {
    const Real g = g1[i] + wd * t[i];
    v[i] = mu * v[i] + g;
    t[i] -= lr * v[i];
    CHECK(theta[i] == doctest::Approx(t[i]).epsilon(1e-15));
  }

  grad[0] = g2[0];
  grad[1] = g2[1];
  opt.step(refs);
  for (int i = 0; i < 2; ++i) {
    const Real g = g2[i] + wd * t[i];
    v[i] = mu * v[i] + g;
    t[i] -= lr * v[i];
    CHECK(theta[i] == doctest::Approx(t[i]).epsilon(1e-15));
  }
}

TEST_CASE("step-decay schedule multiplies once per passed milestone") {
  const std::vector<int> ms = {10, 20};
  CHECK(lr_at_epoch(0.01, 1, ms, 0.1) == 0.01);
  CHECK(lr_at_epoch(0.01, 9, ms, 0.1) == 0.01);
  CHECK(lr_at_epoch(0.01, 10, ms, 0.1) == 0.01 * 0.1);
  CHECK(lr_at_epoch(0.01, 15, ms, 0.1) == 0.01 * 0.1);
  CHECK(lr_at_epoch(0.01, 20, ms, 0.1) == doctest::Approx(0.01 * 0.1 * 0.1).epsilon(1e-15));
  CHECK(lr_at_epoch(0.01, 99, ms, 0.1) == doctest::Approx(1e-4).epsilon(1e-12));
  CHECK(lr_at_epoch(0.01, 50, {}, 0.1) == 0.01);
  CHECK(lr_at_epoch(0.01, 1, {1}, 0.5) == 0.005);
}

TEST_CASE("label rank and metrics agree with a sort-based oracle") {
  std::mt19937_64 rng(310);
  const int k = 6;
  EvalMetrics metrics(k);
  int o_count = 0, o_top1 = 0, o_top5 = 0;
  std::vector<int> o_total(k, 0), o_hits(k, 0);
  std::vector<std::vector<int>> o_conf(k, std::vector<int>(k, 0));

  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Real> scores(k);
    for (auto& s : scores) s = static_cast<Real>(rng() % 5) / 4.0;  // coarse: ties happen
    const int label = static_cast<int>(rng() % k);

    std::vector<int> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int lhs, int rhs) {
      if (scores[lhs] != scores[rhs]) return scores[lhs] > scores[rhs];
      return lhs < rhs;
    });
    const int rank =
        static_cast<int>(std::find(order.begin(), order.end(), label) - order.begin());
    CHECK(label_rank(scores, label) == rank);
    CHECK(argmax_class(scores) == order[0]);

    metrics.add(scores, label);
    ++o_count;
    if (rank == 0) ++o_top1;
    if (rank < 5) ++o_top5;
    ++o_total[label];
    if (rank == 0) ++o_hits[label];
    ++o_conf[label][order[0]];
  }

  CHECK(metrics.count == o_count);
  CHECK(metrics.top1_hits == o_top1);
  CHECK(metrics.top5_hits == o_top5);
  CHECK(metrics.top1() == static_cast<Real>(o_top1) / o_count);
  CHECK(metrics.top5() == static_cast<Real>(o_top5) / o_count);
  int conf_sum = 0;
  for (int t = 0; t < k; ++t) {
    CHECK(metrics.class_total[t] == o_total[t]);
    CHECK(metrics.class_hits[t] == o_hits[t]);
    CHECK(metrics.confusion[t][t] == o_hits[t]);  // tie handling keeps these consistent
    for (int p = 0; p < k; ++p) {
      CHECK(metrics.confusion[t][p] == o_conf[t][p]);
      conf_sum += metrics.confusion[t][p];
    }
  }
  CHECK(conf_sum == o_count);
  CHECK(EvalMetrics(3).top1() == 0);
}

TEST_CASE("stratified split keeps every class represented and stays stable") {
  DatasetIndex index;
  index.classes = {"a", "b", "c"};
  const std::vector<int> labels = {0, 1, 0, 2, 0, 1, 0, 0, 1, 0, 0};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    MultimodalClip clip;
    clip.id = "clip_" + std::to_string(i);
    clip.label = labels[i];
    index.clips.push_back(clip);
  }

  const DataSplit s = stratified_split(index, 0.3, 42);
  CHECK(s.train.size() + s.val.size() == labels.size());
  CHECK(std::is_sorted(s.train.begin(), s.train.end()));
  CHECK(std::is_sorted(s.val.begin(), s.val.end()));
  std::vector<int> all = s.train;
  all.insert(all.end(), s.val.begin(), s.val.end());
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < all.size(); ++i) CHECK(all[i] == static_cast<int>(i));

  std::vector<int> val_per_class(3, 0);
  for (int i : s.val) ++val_per_class[labels[i]];
  CHECK(val_per_class[0] == 2);  // floor(0.3 * 7)
  CHECK(val_per_class[1] == 1);  // floor(0.9) = 0, bumped to the one-clip minimum
  CHECK(val_per_class[2] == 1);  // the only clip of its class

  const DataSplit again = stratified_split(index, 0.3, 42);
  CHECK(again.train == s.train);
  CHECK(again.val == s.val);
  const DataSplit other = stratified_split(index, 0.3, 43);
  CHECK(other.val != s.val);

  const DataSplit none = stratified_split(index, 0.0, 42);
  CHECK(none.val.empty());
  CHECK(none.train.size() == labels.size());
  const DataSplit full = stratified_split(index, 1.0, 42);
  CHECK(full.train.empty());
  CHECK(full.val.size() == labels.size());
}
