#include <random>

#include "doctest.h"
#include "dermkit/error.hpp"
#include "dermkit/licu.hpp"
#include "dermkit/morphology.hpp"
#include "oracles.hpp"

using namespace dermkit;

namespace {

ClassMaps constant_maps(int h, int w, double a, double b, double c) {
  return {Grid<double>(h, w, a), Grid<double>(h, w, b), Grid<double>(h, w, c)};
}

ClassMaps random_maps(int h, int w, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 2.0);
  ClassMaps m = constant_maps(h, w, 0, 0, 0);
  for (auto& g : m)
    for (double& v : g.data) v = u(rng);
  return m;
}

BinaryMask random_blob(int h, int w, std::mt19937_64& rng) {
  BinaryMask m(h, w);
  const double cy = h / 2.0 + (rng() % 5) - 2.0;
  const double cx = w / 2.0 + (rng() % 5) - 2.0;
  const double r = 3.0 + (rng() % 60) / 10.0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if ((y - cy) * (y - cy) + (x - cx) * (x - cx) <= r * r) m.at(y, x) = 1;
  return m;
}

DistanceMap scaled(const DistanceMap& d, double c) {
  DistanceMap out = d;
  for (double& v : out.data) v *= c;
  return out;
}

}  // namespace

TEST_CASE("normalization examples") {
  auto at0 = [](const ClassMaps& m) {
    return std::array<double, 3>{m[0].data[0], m[1].data[0], m[2].data[0]};
  };
  const auto p = at0(normalize_possibilities(constant_maps(1, 1, 0.2, 0.5, 0.3)));
  CHECK(p[0] == 0.0);
  CHECK(p[1] == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(p[2] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(at0(normalize_possibilities(constant_maps(1, 1, 0, 1, 0))) == std::array<double, 3>{0, 1, 0});
  for (double c : {0.0, 0.3, 1.0, 7.5, -2.0}) {
    const auto u = at0(normalize_possibilities(constant_maps(1, 1, c, c, c)));
    for (double v : u) CHECK(v == 1.0 / 3.0);
  }
}

TEST_CASE("normalization on random pixels") {
  std::mt19937_64 rng(3);
  const ClassMaps v = random_maps(100, 1000, rng);
  const ClassMaps p = normalize_possibilities(v);
  std::uniform_real_distribution<double> shift(-5.0, 5.0);
  ClassMaps moved = v;
  ClassMaps stretched = v;
  for (std::size_t i = 0; i < v[0].size(); ++i) {
    const double s = shift(rng);
    const double lo = std::min({v[0].data[i], v[1].data[i], v[2].data[i]});
    for (int k = 0; k < 3; ++k) {
      moved[k].data[i] += s;
      stretched[k].data[i] = lo + 3.0 * (v[k].data[i] - lo);
    }
  }
  const ClassMaps pm = normalize_possibilities(moved);
  const ClassMaps ps = normalize_possibilities(stretched);
  for (std::size_t i = 0; i < v[0].size(); ++i) {
    const auto ref = oracle::direct_normalize(v[0].data[i], v[1].data[i], v[2].data[i]);
    const double sum = p[0].data[i] + p[1].data[i] + p[2].data[i];
    CHECK(std::abs(sum - 1.0) <= 1e-9);
    CHECK(std::min({p[0].data[i], p[1].data[i], p[2].data[i]}) == 0.0);
    for (int k = 0; k < 3; ++k) {
      CHECK(p[k].data[i] == doctest::Approx(ref[k]).epsilon(1e-12));
      CHECK(std::abs(pm[k].data[i] - p[k].data[i]) < 1e-9);
      CHECK(std::abs(ps[k].data[i] - p[k].data[i]) < 1e-12);
    }
  }
}

TEST_CASE("refine and lesion index examples") {
  const ClassMaps p = constant_maps(1, 1, 0, 0.75, 0.25);
  const ClassMaps r = refine(p, DistanceMap(1, 1, 2.0));
  CHECK(r[0].data[0] == 0.0);
  CHECK(r[1].data[0] == 1.5);
  CHECK(r[2].data[0] == 0.5);
  for (const auto& g : refine(p, DistanceMap(1, 1, 0.0))) CHECK(g.data[0] == 0.0);
  CHECK(refine(p, DistanceMap(1, 1, 1.0)) == p);

  ClassMaps two = constant_maps(1, 2, 0, 0, 0);
  two[1].data[0] = 1;
  two[2].data[1] = 1;
  const LesionIndex idx = lesion_index(two, BinaryMask(1, 2, 1));
  CHECK(idx.values == std::array<double, 3>{0.0, 0.5, 0.5});

  const LesionIndex c = lesion_index(refine(constant_maps(4, 4, 0.2, 0.5, 0.3), DistanceMap(4, 4, 3.0)),
                                     BinaryMask(4, 4, 1));
  CHECK(c.values[0] == doctest::Approx(0.2).epsilon(1e-9));
  CHECK(c.values[1] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(c.values[2] == doctest::Approx(0.3).epsilon(1e-9));
  CHECK(c.predicted() == LesionClass::seborrheic_keratosis);

  CHECK_THROWS_AS(lesion_index(two, BinaryMask(1, 2, 0)), NoLesionFound);
}

TEST_CASE("lesion index is invariant to distance scaling") {
  std::mt19937_64 rng(41);
  for (int t = 0; t < 100; ++t) {
    const ClassMaps p = normalize_possibilities(random_maps(24, 24, rng));
    const BinaryMask mask = random_blob(24, 24, rng);
    const DistanceMap d = distance_map(mask);
    const LesionIndex base = lesion_index(refine(p, d), mask);
    for (double c : {0.1, 1.0, 7.3}) {
      const LesionIndex s = lesion_index(refine(p, scaled(d, c)), mask);
      CHECK(s.values == base.values);
      CHECK(s.predicted() == base.predicted());
    }
    // A constant distance map reduces LICU to plain averaging over the mask.
    std::array<double, 3> mean{};
    for (std::size_t i = 0; i < mask.size(); ++i)
      if (mask.data[i])
        for (int k = 0; k < 3; ++k) mean[k] += p[k].data[i];
    const auto plain = static_cast<LesionClass>(std::max_element(mean.begin(), mean.end()) - mean.begin());
    CHECK(lesion_index(refine(p, DistanceMap(24, 24, 2.5)), mask).predicted() == plain);
  }
}

TEST_CASE("classification csv") {
  LesionIndex a;
  a.values = {0.5, 0.25, 0.25};
  const std::string csv = classification_csv({"ISIC_1"}, {a});
  CHECK(csv == "image_id,melanoma_index,sk_index,nevus_index\nISIC_1,0.5,0.25,0.25\n");
}
