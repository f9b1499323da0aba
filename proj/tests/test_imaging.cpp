#include <algorithm>
#include <random>

#include "doctest.h"
#include "dermkit/image.hpp"
#include "dermkit/image_io.hpp"
#include "dermkit/morphology.hpp"
#include "dermkit/transform.hpp"
#include "oracles.hpp"

using namespace dermkit;

namespace {

BinaryMask random_mask(int h, int w, double p, std::mt19937_64& rng) {
  BinaryMask m(h, w);
  std::bernoulli_distribution b(p);
  for (auto& v : m.data) v = b(rng);
  return m;
}

// Blobby random mask: a few random discs.
BinaryMask disc_mask(int h, int w, std::mt19937_64& rng) {
  BinaryMask m(h, w);
  const int discs = 1 + static_cast<int>(rng() % 4);
  for (int d = 0; d < discs; ++d) {
    const double cy = rng() % h;
    const double cx = rng() % w;
    const double r = 1.0 + (rng() % 100) / 100.0 * std::min(h, w) / 2.0;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if ((y - cy) * (y - cy) + (x - cx) * (x - cx) <= r * r) m.at(y, x) = 1;
      }
    }
  }
  return m;
}

Image random_image(int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Image img(h, w);
  for (double& v : img.data) v = u(rng);
  return img;
}

Image two_by_two(double a, double b, double c, double d) {
  Image img(2, 2);
  for (int ch = 0; ch < 3; ++ch) {
    img.at(ch, 0, 0) = a;
    img.at(ch, 0, 1) = b;
    img.at(ch, 1, 0) = c;
    img.at(ch, 1, 1) = d;
  }
  return img;
}

}  // namespace

TEST_CASE("border of a 3x3 block") {
  BinaryMask m(5, 5);
  for (int y = 1; y <= 3; ++y)
    for (int x = 1; x <= 3; ++x) m.at(y, x) = 1;
  const auto b = extract_border(m);
  CHECK(b.size() == 8);
  CHECK(std::find(b.begin(), b.end(), Pixel{2, 2}) == b.end());
  const DistanceMap d = distance_map(m);
  CHECK(d.at(2, 2) == 1.0);
  CHECK(d.at(1, 1) == 0.0);

  CHECK(extract_border(BinaryMask(4, 4)).empty());
  BinaryMask single(3, 3);
  single.at(1, 1) = 1;
  CHECK(extract_border(single) == std::vector<Pixel>{{1, 1}});
  CHECK(distance_map(BinaryMask(4, 4)) == DistanceMap(4, 4, 0.0));
  CHECK(distance_map(BinaryMask(5, 5, 1)).at(2, 2) == 2.0);
}

TEST_CASE("distance map equals brute-force nearest-border search") {
  std::mt19937_64 rng(2024);
  for (int t = 0; t < 200; ++t) {
    const int h = 1 + static_cast<int>(rng() % 32);
    const int w = 1 + static_cast<int>(rng() % 32);
    const BinaryMask m = t % 2 ? random_mask(h, w, 0.3 + 0.6 * (t % 7) / 7.0, rng) : disc_mask(h, w, rng);
    const DistanceMap d = distance_map(m);
    CHECK(d == oracle::brute_force_distance(m));
    // Positive exactly on lesion minus border.
    const auto border = extract_border(m);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const bool on_border = std::binary_search(border.begin(), border.end(), Pixel{y, x});
        CHECK((d.at(y, x) > 0) == (m.at(y, x) && !on_border));
        if (on_border) CHECK(m.at(y, x) == 1);
      }
    }
  }
}

TEST_CASE("largest component") {
  BinaryMask m(6, 10);
  for (int x = 0; x < 5; ++x) m.at(1, x) = 1;
  for (int x = 7; x < 10; ++x) m.at(4, x) = 1;
  const BinaryMask l = largest_component(m);
  CHECK(std::count(l.data.begin(), l.data.end(), 1) == 5);
  CHECK(l.at(1, 0) == 1);
  CHECK(l.at(4, 8) == 0);
  CHECK(largest_component(BinaryMask(3, 3)) == BinaryMask(3, 3));

  BinaryMask ring(5, 5, 1);
  ring.at(2, 2) = 0;
  CHECK(largest_component(ring) == BinaryMask(5, 5, 1));
  CHECK(fill_holes(ring) == BinaryMask(5, 5, 1));
}

TEST_CASE("rotation and flip permutations") {
  const Image img = two_by_two(1, 2, 3, 4);
  CHECK(rotate(img, 0) == img);
  CHECK(rotate(img, 90) == two_by_two(2, 4, 1, 3));
  CHECK(rotate(img, 360) == img);
  CHECK(flip(img, FlipAxis::x) == two_by_two(2, 1, 4, 3));
  CHECK(flip(img, FlipAxis::y) == two_by_two(3, 4, 1, 2));

  const Image r = random_image(9, 9, 3);
  CHECK(flip(flip(r, FlipAxis::x), FlipAxis::x) == r);
  CHECK(flip(flip(r, FlipAxis::y), FlipAxis::y) == r);
  for (int a : {90, 180, 270, -90}) {
    auto v = rotate(r, a).data;
    auto w = r.data;
    std::sort(v.begin(), v.end());
    std::sort(w.begin(), w.end());
    CHECK(v == w);
  }
  CHECK(rotate(rotate(r, 90), 270) == r);
  const Image rect = random_image(6, 11, 4);
  CHECK(rotate(rotate(rect, 180), 180) == rect);
  // Arbitrary angles preserve size.
  const Image t = rotate(rect, 18);
  CHECK(t.height == 6);
  CHECK(t.width == 11);
}

TEST_CASE("bilinear resize matches independent resampler") {
  const Image src = random_image(7, 9, 8);
  for (auto [oh, ow] : {std::pair{56, 56}, std::pair{3, 4}, std::pair{7, 9}, std::pair{13, 5}}) {
    const Image out = resize_bilinear(src, oh, ow);
    for (int c = 0; c < 3; ++c) {
      const std::vector<double> plane(src.data.begin() + c * 63, src.data.begin() + (c + 1) * 63);
      const auto ref = oracle::resample(plane, 7, 9, oh, ow);
      for (int i = 0; i < oh * ow; ++i) {
        CHECK(out.data[c * oh * ow + i] == doctest::Approx(ref[i]).epsilon(1e-12));
      }
    }
  }
  CHECK(resize_bilinear(src, 7, 9) == src);
}

TEST_CASE("crop and proportional resize") {
  const Image sq = random_image(32, 32, 1);
  CHECK(center_crop_resize(sq, 32) == sq);

  Image board(4, 2);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 2; ++x) board.at(c, y, x) = (x + y) % 2;
  CHECK(center_crop_resize(board, 2) == two_by_two(1, 0, 0, 1));

  const Image wide = random_image(70, 100, 2);
  const Image cr = center_crop_resize(wide, 32);
  CHECK(cr.height == 32);
  CHECK(cr.width == 32);

  CHECK(proportional_size(450, 600, 300) == std::pair{225, 300});
  CHECK(proportional_size(450, 600, 500) == std::pair{375, 500});
  CHECK(proportional_size(450, 600, 600) == std::pair{450, 600});
  std::mt19937_64 rng(5);
  for (int t = 0; t < 200; ++t) {
    const int h = 1 + rng() % 900;
    const int w = 1 + rng() % 900;
    const int target = 1 + rng() % 600;
    const auto [oh, ow] = proportional_size(h, w, target);
    CHECK(std::max(oh, ow) == target);
    const double exact = static_cast<double>(std::min(h, w)) * target / std::max(h, w);
    CHECK(std::abs(std::min(oh, ow) - exact) <= 1.0);
  }
}

TEST_CASE("png round trip and label maps") {
  Image img(3, 4);
  for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = (i * 17 % 256) / 255.0;
  CHECK(decode_image(encode_png(img)) == img);
  CHECK(encode_png(img) == encode_png(img));
}
