#include <random>

#include "doctest.h"
#include "json.hpp"
#include "dermkit/metrics.hpp"
#include "oracles.hpp"

using namespace dermkit;

TEST_CASE("confusion counts") {
  std::mt19937_64 rng(1);
  BinaryMask a(16, 16);
  BinaryMask b(16, 16);
  for (auto& v : a.data) v = rng() & 1;
  for (auto& v : b.data) v = rng() & 1;
  ConfusionCounts ref;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.data[i] && b.data[i]) ++ref.tp;
    if (!a.data[i] && !b.data[i]) ++ref.tn;
    if (a.data[i] && !b.data[i]) ++ref.fp;
    if (!a.data[i] && b.data[i]) ++ref.fn;
  }
  CHECK(confusion(a, b) == ref);
  CHECK(confusion(a, b).total() == 256);
  const ConfusionCounts same = confusion(a, a);
  CHECK(same.fp == 0);
  CHECK(same.fn == 0);
  BinaryMask inv = a;
  for (auto& v : inv.data) v = !v;
  CHECK(confusion(inv, a).tp == 0);
  CHECK(confusion(inv, a).tn == 0);
  CHECK_THROWS(confusion(a, BinaryMask(16, 15)));
}

TEST_CASE("segmentation metric values") {
  const SegMetrics m = seg_metrics({2, 10, 1, 1});
  CHECK(m.jaccard == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(m.dice == doctest::Approx(2.0 / 3).epsilon(1e-15));
  CHECK(m.sensitivity == doctest::Approx(2.0 / 3).epsilon(1e-15));
  CHECK(m.specificity == doctest::Approx(10.0 / 11).epsilon(1e-15));
  CHECK(m.accuracy == doctest::Approx(12.0 / 14).epsilon(1e-15));

  const SegMetrics perfect = seg_metrics({5, 7, 0, 0});
  for (double v : {perfect.accuracy, perfect.jaccard, perfect.dice, perfect.sensitivity,
                   perfect.specificity})
    CHECK(v == 1.0);
  const SegMetrics miss = seg_metrics({0, 4, 2, 3});
  CHECK(miss.jaccard == 0.0);
  CHECK(miss.dice == 0.0);

  const SegMetrics empty = seg_metrics({0, 9, 0, 0});
  CHECK(empty.jaccard == 1.0);
  CHECK(empty.dice == 1.0);
  CHECK(empty.sensitivity == 1.0);
  CHECK(seg_metrics({3, 0, 0, 0}).specificity == 1.0);
}

TEST_CASE("segmentation metrics against direct evaluation") {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 1000; ++t) {
    const ConfusionCounts c{rng() % 50, rng() % 50, rng() % 50, rng() % 50};
    const SegMetrics m = seg_metrics(c);
    const auto r = oracle::direct_seg(c.tp, c.tn, c.fp, c.fn);
    CHECK(m.accuracy == doctest::Approx(r.ac).epsilon(1e-14));
    CHECK(m.jaccard == doctest::Approx(r.ja).epsilon(1e-14));
    CHECK(m.dice == doctest::Approx(r.di).epsilon(1e-14));
    CHECK(m.sensitivity == doctest::Approx(r.se).epsilon(1e-14));
    CHECK(m.specificity == doctest::Approx(r.sp).epsilon(1e-14));
    CHECK(m.dice == doctest::Approx(2 * m.jaccard / (1 + m.jaccard)).epsilon(1e-12));
    if (c.tp + c.fn > 0 && c.tn + c.fp > 0) {
      CHECK(m.accuracy >= std::min(m.sensitivity, m.specificity) - 1e-15);
      CHECK(m.accuracy <= std::max(m.sensitivity, m.specificity) + 1e-15);
    }
  }
}

TEST_CASE("roc auc") {
  const std::vector<double> s{0.9, 0.8, 0.7, 0.6};
  const std::vector<int> l{1, 0, 1, 0};
  const RocResult r = roc_auc(s, l);
  CHECK(r.auc == 0.75);
  CHECK(r.curve.front().fpr == 0.0);
  CHECK(r.curve.back().tpr == 1.0);
  CHECK(roc_auc(s, std::vector<int>{1, 1, 0, 0}).auc == 1.0);
  CHECK_THROWS(roc_auc(s, std::vector<int>{1, 1, 1, 1}));

  std::mt19937_64 rng(3);
  for (int n = 2; n <= 200; ++n) {
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    for (int i = 0; i < n; ++i) {
      scores[i] = static_cast<double>(rng() % (n % 3 == 0 ? 5 : 1000)) / 10.0;  // some with many ties
      labels[i] = rng() & 1;
    }
    labels[0] = 1;
    labels[1] = 0;
    const RocResult res = roc_auc(scores, labels);
    CHECK(res.auc == oracle::pair_count_auc(scores, labels));
    std::vector<int> flipped(n);
    for (int i = 0; i < n; ++i) flipped[i] = 1 - labels[i];
    CHECK(roc_auc(scores, flipped).auc == doctest::Approx(1.0 - res.auc).epsilon(1e-14));
    for (std::size_t i = 1; i < res.curve.size(); ++i) {
      CHECK(res.curve[i].fpr >= res.curve[i - 1].fpr);
      CHECK(res.curve[i].tpr >= res.curve[i - 1].tpr);
    }
    CHECK(res.curve.back().fpr == 1.0);
    CHECK(res.curve.back().tpr == 1.0);
  }

  std::vector<double> scores(10000);
  std::vector<int> coin(10000);
  for (int i = 0; i < 10000; ++i) {
    scores[i] = static_cast<double>(rng()) / 1.8446744073709552e19;
    coin[i] = rng() & 1;
  }
  CHECK(std::abs(roc_auc(scores, coin).auc - 0.5) <= 0.02);
}

TEST_CASE("average precision vectors") {
  CHECK(average_precision(std::vector<double>{0.9, 0.8, 0.1}, std::vector<int>{1, 1, 0}) == 1.0);
  CHECK(average_precision(std::vector<double>{0.9, 0.8, 0.7, 0.6}, std::vector<int>{0, 1, 0, 0}) ==
        0.5);
  CHECK(average_precision(std::vector<double>{0.9, 0.8, 0.7}, std::vector<int>{1, 0, 1}) ==
        (1.0 + 2.0 / 3.0) / 2.0);
  // Ties keep input order.
  CHECK(average_precision(std::vector<double>{0.5, 0.5}, std::vector<int>{0, 1}) == 0.5);
  CHECK_THROWS(average_precision(std::vector<double>{0.5}, std::vector<int>{0}));
}

TEST_CASE("reports") {
  const auto seg = nlohmann::json::parse(segmentation_report(
      {{"a", seg_metrics({1, 1, 0, 0})}, {"b", seg_metrics({1, 1, 1, 1})}}));
  CHECK(seg["rank_metric"] == "JA");
  CHECK(seg["mean"]["JA"].get<double>() == doctest::Approx((1.0 + 1.0 / 3) / 2));
  CHECK(seg["images"].size() == 2);
  const auto cls = nlohmann::json::parse(
      classification_report("task3", {{"melanoma", 0.8, 0.6}, {"seborrheic_keratosis", 0.9, 0.7}}));
  CHECK(cls["rank_value"].get<double>() == doctest::Approx(0.85));
}
