#include <map>
#include <random>

#include "doctest.h"
#include "dermkit/engine.hpp"
#include "dermkit/licu.hpp"
#include "dermkit/lin.hpp"
#include "dermkit/loss.hpp"
#include "dermkit/synthetic.hpp"
#include "dermkit/transform.hpp"

using namespace dermkit;

namespace {

MiniFcrnSpec tiny_spec() {
  MiniFcrnSpec s;
  s.stem_width = 4;
  s.level_widths = {4, 6, 6};
  s.blocks_per_level = 1;
  return s;
}

Image random_image(int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Image img(h, w);
  for (double& v : img.data) v = u(rng);
  return img;
}

CoarseMaps maps_from(const std::vector<std::array<double, 4>>& px, int h, int w) {
  CoarseMaps m;
  m.runs = 1;
  m.scores = Tensor({1, 4, h, w});
  for (int i = 0; i < h * w; ++i)
    for (int k = 0; k < 4; ++k) m.scores.at(0, k, i / w, i % w) = px[i][k];
  return m;
}

}  // namespace

TEST_CASE("mini-FCRN shapes") {
  const NetworkSpec net = build_mini_fcrn();
  CHECK(infer_shapes(net, {1, 3, 320, 320}).back() == Shape{1, 4, 320, 320});
  CHECK(infer_shapes(net, {2, 3, 224, 224}).back() == Shape{2, 4, 224, 224});
  CHECK(infer_shapes(net, {1, 3, 320, 256}).back() == Shape{1, 4, 320, 256});

  const NetworkSpec tiny = build_mini_fcrn(tiny_spec());
  Parameters p = init_parameters(tiny, 1);
  CHECK(predict(tiny, p, to_tensor(random_image(24, 32, 1))).shape() == Shape{1, 4, 24, 32});
  CHECK(predict(tiny, p, to_tensor(random_image(19, 13, 1))).shape() == Shape{1, 4, 19, 13});
  p.layers.back().weight.fill(0.0);
  p.layers.back().bias.fill(0.0);
  const Tensor probs = softmax_channels(predict(tiny, p, to_tensor(random_image(16, 16, 2))));
  for (double v : probs.values()) CHECK(v == 0.25);
}

TEST_CASE("multi-scale fusion") {
  const NetworkSpec net = build_mini_fcrn(tiny_spec());
  const Parameters a = init_parameters(net, 3);
  const Parameters b = init_parameters(net, 4);
  const Image img = random_image(30, 40, 5);
  const std::vector<int> native{40};

  const CoarseMaps one = infer_multiscale(net, std::vector<Parameters>{a}, img, native);
  CHECK(one.runs == 1);
  CHECK(one.scores == softmax_channels(predict(net, a, to_tensor(img))));

  const CoarseMaps twice = infer_multiscale(net, std::vector<Parameters>{a, a}, img, native);
  for (std::size_t i = 0; i < one.scores.size(); ++i) CHECK(twice.scores[i] == 2.0 * one.scores[i]);

  const std::vector<int> scales{24, 40, 56};
  const CoarseMaps fused = infer_multiscale(net, std::vector<Parameters>{a, b}, img, scales);
  CHECK(fused.runs == 6);
  for (int y = 0; y < 30; ++y) {
    for (int x = 0; x < 40; ++x) {
      double s = 0.0;
      for (int k = 0; k < 4; ++k) s += fused.scores.at(0, k, y, x);
      CHECK(s == doctest::Approx(6.0).epsilon(1e-9));
    }
  }
  CHECK(proportional_size(450, 600, 300) == std::pair{225, 300});
  CHECK_THROWS(infer_multiscale(net, std::vector<Parameters>{a}, img, std::vector<int>{4}));
}

TEST_CASE("segmentation from coarse maps") {
  std::vector<std::array<double, 4>> px(5 * 8, {1.0, 0.1, 0.1, 0.1});
  CHECK(segment(maps_from(px, 5, 8)) == BinaryMask(5, 8));

  // Two blobs: 3 pixels and 6 pixels.
  for (int x = 0; x < 3; ++x) px[x] = {0.1, 0.9, 0.0, 0.0};
  for (int x = 2; x < 8; ++x) px[4 * 8 + x] = {0.1, 0.0, 0.0, 0.9};
  const BinaryMask m = segment(maps_from(px, 5, 8));
  CHECK(std::count(m.data.begin(), m.data.end(), 1) == 6);
  CHECK(m.at(4, 5) == 1);

  // Exact ties go to background.
  px[20] = {0.5, 0.5, 0.0, 0.0};
  CHECK(segment(maps_from(px, 5, 8)).data[20] == 0);

  // Positive rescaling leaves the mask unchanged.
  CoarseMaps scaled = maps_from(px, 5, 8);
  for (double& v : scaled.scores.values()) v *= 3.7;
  CHECK(segment(scaled) == m);
}

TEST_CASE("lesion classification falls back to the whole image") {
  std::vector<std::array<double, 4>> px(6 * 6, {1.0, 0.2, 0.5, 0.3});
  const Classification c = classify_lesion(maps_from(px, 6, 6));
  CHECK(c.whole_image);
  CHECK(c.index.predicted() == LesionClass::seborrheic_keratosis);
  const double sum = c.index.values[0] + c.index.values[1] + c.index.values[2];
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));

  // A one-pixel-wide lesion has no interior and keeps uniform weights.
  for (int x = 0; x < 6; ++x) px[2 * 6 + x] = {0.0, 0.9, 0.1, 0.0};
  const Classification thin = classify_lesion(maps_from(px, 6, 6));
  CHECK_FALSE(thin.whole_image);
  CHECK(thin.index.predicted() == LesionClass::melanoma);
}

TEST_CASE("labels, materialization and the validation split") {
  BinaryMask m(2, 2);
  m.data = {1, 0, 0, 1};
  CHECK(pixel_labels(m, LesionClass::nevus) == std::vector<int>{3, 0, 0, 3});

  const SampleLoader load = [](const std::string& path) {
    return blob_sample(LesionClass::melanoma, std::hash<std::string>{}(path), {40, false});
  };
  const ManifestRecord rec{"a", "src/a", "melanoma", 90.0, FlipAxis::x};
  const LesionSample s = materialize(rec, load, 24);
  CHECK(s.image.height == 24);
  CHECK(s.mask.width == 24);
  const LesionSample raw = load("src/a");
  CHECK(materialize({"a", "src/a", "melanoma", 0.0, FlipAxis::none}, load, 40).image == raw.image);

  DatasetManifest src;
  for (int i = 0; i < 10; ++i) {
    src.records.push_back({"s" + std::to_string(i), "src/" + std::to_string(i), "nevus", 0.0, FlipAxis::none});
  }
  AugmentPlan plan;
  plan.rotation_step = {{"nevus", 90}};
  const DatasetManifest dr = build_dr(src, plan);
  const auto held = validation_sources(dr, 0.2, 3);
  CHECK(held.size() == 2);
  CHECK(validation_sources(build_dm(dr, 1), 0.2, 3) == held);
}

TEST_CASE("pair training") {
  const NetworkSpec net = build_mini_fcrn(tiny_spec());
  DatasetManifest src;
  const char* names[] = {"melanoma", "seborrheic_keratosis", "nevus"};
  for (int i = 0; i < 6; ++i) {
    src.records.push_back({"s" + std::to_string(i), std::to_string(i), names[i % 3], 0.0, FlipAxis::none});
  }
  AugmentPlan plan;
  plan.rotation_step = {{"melanoma", 180}, {"seborrheic_keratosis", 180}, {"nevus", 180}};
  const DatasetManifest dr = build_dr(src, plan);
  const DatasetManifest dm = build_dm(dr, 2);
  const SampleLoader load = [](const std::string& path) {
    const int i = std::stoi(path);
    return blob_sample(static_cast<LesionClass>(i % 3), i, {32, false});
  };
  LinTrainConfig cfg;
  cfg.train_side = 16;
  cfg.train.batch_size = 4;
  cfg.train.epochs = 0;
  const LinPair none = train_lin_pair(net, dr, dm, load, cfg);
  CHECK(none.dr.params == init_parameters(net, 0));
  CHECK(none.dm.params == none.dr.params);

  cfg.train.epochs = 1;
  std::map<std::string, int> seen;
  const LinPair pair = train_lin_pair(net, dr, dm, load, cfg,
                                      [&](std::string_view n, const EpochLog&) { ++seen[std::string(n)]; });
  CHECK(seen["dr"] == 1);
  CHECK(seen["dm"] == 1);
  CHECK_FALSE(pair.dr.params == pair.dm.params);
}
