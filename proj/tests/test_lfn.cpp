#include <cmath>
#include <numeric>

#include "doctest.h"
#include "dermkit/lfn.hpp"
#include "dermkit/synthetic.hpp"
#include "dermkit/transform.hpp"

using namespace dermkit;

namespace {

constexpr int kSmall = 24;

int count_kind(const NetworkSpec& net, LayerKind kind) {
  return static_cast<int>(std::count_if(net.layers.begin(), net.layers.end(),
                                        [&](const LayerSpec& l) { return l.kind == kind; }));
}

// Texture patches shrunk to kSmall so training runs in seconds.
PatchSource small_source(std::vector<int> per_class, std::uint64_t seed) {
  PatchSource src;
  std::vector<std::pair<FeatureClass, std::uint64_t>> items;
  for (int k = 0; k < kFeatureClasses; ++k) {
    for (int i = 0; i < per_class[k]; ++i) {
      src.labels.push_back(static_cast<FeatureClass>(k));
      items.emplace_back(static_cast<FeatureClass>(k), seed * 1000003 + items.size());
    }
  }
  src.load = [items](std::size_t i) {
    return resize_bilinear(texture_patch(items[i].first, items[i].second), kSmall, kSmall);
  };
  return src;
}

LfnTrainConfig small_config(int epochs, int batch) {
  LfnTrainConfig cfg;
  cfg.train.epochs = epochs;
  cfg.train.batch_size = batch;
  cfg.train.seed = 3;
  cfg.init_seed = 4;
  return cfg;
}

}  // namespace

TEST_CASE("standard topology") {
  const NetworkSpec net = build_lfn(LfnVariant::standard);
  CHECK(count_kind(net, LayerKind::conv) == 12);
  CHECK(count_kind(net, LayerKind::batch_norm) == 12);
  CHECK(count_kind(net, LayerKind::max_pool) == 3);
  CHECK(count_kind(net, LayerKind::dense) == 1);
  std::vector<int> kernels;
  std::vector<int> widths;
  std::vector<LayerKind> pools;
  for (const auto& l : net.layers) {
    if (l.kind == LayerKind::conv) {
      kernels.push_back(l.kernel_h);
      widths.push_back(l.out_channels);
    }
    if (l.kind == LayerKind::max_pool || l.kind == LayerKind::avg_pool) pools.push_back(l.kind);
  }
  CHECK(kernels == std::vector<int>{3, 1, 3, 3, 1, 3, 3, 1, 3, 3, 1, 3});
  CHECK(widths == std::vector<int>{16, 16, 16, 32, 32, 32, 64, 64, 64, 128, 128, 128});
  CHECK(pools == std::vector<LayerKind>{LayerKind::max_pool, LayerKind::max_pool,
                                        LayerKind::max_pool, LayerKind::avg_pool});
  CHECK(net.layers.back().out_channels == 5);

  const auto shapes = infer_shapes(net, {1, 3, 56, 56});
  std::vector<int> sides;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    if (net.layers[i].kind == LayerKind::conv && (sides.empty() || sides.back() != shapes[i].h)) {
      sides.push_back(shapes[i].h);
    }
  }
  CHECK(sides == std::vector<int>{56, 28, 14, 7});
  CHECK(shapes[shapes.size() - 2] == Shape{1, 128, 1, 1});
  CHECK(shapes.back() == Shape{1, 5, 1, 1});

  CHECK(parameter_count(build_lfn(LfnVariant::narrow)) < parameter_count(net));
  CHECK(parameter_count(net) < parameter_count(build_lfn(LfnVariant::wide)));
  CHECK(lfn_class_weights().values() == std::vector<double>{1, 1, 5, 3, 8});
}

TEST_CASE("stratified split") {
  std::vector<FeatureClass> labels;
  for (int i = 0; i < 50; ++i) labels.push_back(static_cast<FeatureClass>(i % 5));
  const Split s = stratified_split(labels, 0.2, 9);
  CHECK(s.val.size() == 10);
  CHECK(s.train.size() == 40);
  std::array<int, 5> per{};
  for (auto i : s.val) ++per[static_cast<int>(labels[i])];
  for (int v : per) CHECK(v == 2);
  CHECK(stratified_split(labels, 0.2, 9).val == s.val);
}

TEST_CASE("patch classification") {
  const NetworkSpec net = build_lfn(LfnVariant::narrow, {true, kSmall});
  Parameters p = init_parameters(net, 1);
  const PatchSource src = small_source({1, 1, 1, 1, 1}, 1);
  std::vector<Image> patches;
  for (std::size_t i = 0; i < src.size(); ++i) patches.push_back(src.load(i));
  patches.push_back(patches[2]);
  const auto probs = classify_patches(net, p, patches, 3);
  for (const auto& pr : probs) {
    CHECK(std::accumulate(pr.begin(), pr.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(probs[5] == probs[2]);

  p.layers.back().weight.fill(0.0);
  p.layers.back().bias.fill(0.0);
  for (const auto& pr : classify_patches(net, p, patches))
    for (double v : pr) CHECK(v == doctest::Approx(0.2).epsilon(1e-15));

  CHECK_THROWS(classify_patches(net, p, {Image(5, 5)}));
}

TEST_CASE("feature map emission") {
  LabelMap labels(2, 2);
  labels.data = {0, 0, 1, 1};
  const std::map<int, FeatureProbabilities> probs{{0, {0, 1, 0, 0, 0}}, {1, {0.2, 0.2, 0.2, 0.2, 0.2}}};
  const auto calls = emit_feature_map(labels, probs);
  REQUIRE(calls.size() == 2);
  CHECK(calls[0].called == std::array<bool, 5>{false, true, false, false, false});
  CHECK(calls[1].called == std::array<bool, 5>{});
  for (const auto& c : emit_feature_map(labels, probs, 1.0 + 1e-9))
    CHECK(c.called == std::array<bool, 5>{});
  CHECK(feature_csv("img", calls) ==
        "image_id,superpixel_label,PN,NN,MC,S\nimg,0,1,0,0,0\nimg,1,0.2,0.2,0.2,0.2\n");
  CHECK_THROWS(emit_feature_map(labels, {{0, {}}}));

  LabelMap many(12, 83);
  std::iota(many.data.begin(), many.data.end(), 0);
  std::map<int, FeatureProbabilities> all;
  for (int i = 0; i < 996; ++i) all[i] = {1, 0, 0, 0, 0};
  const std::string csv = feature_csv("img", emit_feature_map(many, all));
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 997);
}

TEST_CASE("training contracts") {
  const NetworkSpec net = build_lfn(LfnVariant::narrow, {true, kSmall});
  const PatchSource src = small_source({4, 4, 4, 4, 4}, 2);

  const TrainResult none = train_lfn(net, src, small_config(0, 8));
  CHECK(none.log.empty());
  CHECK(none.params == init_parameters(net, 4));

  LfnTrainConfig a = small_config(2, 8);
  LfnTrainConfig b = a;
  a.train.weights = ClassWeights::uniform(5);
  b.train.weights = ClassWeights({1, 1, 1, 1, 1});
  const TrainResult ra = train_lfn(net, src, a);
  const TrainResult rb = train_lfn(net, src, b);
  CHECK(ra.log == rb.log);
  CHECK(ra.params == rb.params);

  const PatchSource missing = small_source({4, 4, 0, 4, 4}, 2);
  CHECK_THROWS_AS(train_lfn(net, missing, small_config(1, 8)), std::invalid_argument);
}

TEST_CASE("overfits a small set, with and without batch norm") {
  const PatchSource src = small_source({7, 7, 6, 6, 6}, 5);
  for (bool bn : {true, false}) {
    CAPTURE(bn);
    const NetworkSpec net = build_lfn(LfnVariant::narrow, {bn, kSmall});
    LfnTrainConfig cfg = small_config(200, 8);
    cfg.train.weights = ClassWeights::uniform(5);
    cfg.train.sgd.decay_every = 1000;
    double last = 1e9;
    double first = 0.0;
    int reached = -1;
    // The empty validation set keeps the final parameters.
    const TrainResult r = train_lfn(net, src, PatchSource{{}, src.load}, cfg, [&](const EpochLog& e) {
      if (e.epoch == 1) first = e.train_loss;
      last = e.train_loss;
      if (reached < 0 && e.train_loss < 0.05) reached = e.epoch;
    });
    CHECK(reached > 0);
    CHECK(last < first);
  }
}

TEST_CASE("class weights raise minority recall on an imbalanced set") {
  const NetworkSpec net = build_lfn(LfnVariant::narrow, {true, kSmall});
  const PatchSource train = small_source({120, 120, 12, 16, 8}, 6);
  const PatchSource test = small_source({30, 30, 30, 30, 30}, 7);
  std::vector<Image> patches;
  for (std::size_t i = 0; i < test.size(); ++i) patches.push_back(test.load(i));

  auto minority_recall = [&](const ClassWeights& w) {
    LfnTrainConfig cfg = small_config(12, 16);
    cfg.train.weights = w;
    const TrainResult r = train_lfn(net, train, PatchSource{{}, train.load}, cfg);
    const auto probs = classify_patches(net, r.params, patches);
    int hits = 0;
    int total = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      const int label = static_cast<int>(test.labels[i]);
      if (label < 2) continue;
      ++total;
      hits += std::max_element(probs[i].begin(), probs[i].end()) - probs[i].begin() == label;
    }
    return static_cast<double>(hits) / total;
  };
  const double weighted = minority_recall(lfn_class_weights());
  const double plain = minority_recall(ClassWeights::uniform(5));
  MESSAGE("minority recall weighted " << weighted << " uniform " << plain);
  CHECK(weighted > plain);
}
