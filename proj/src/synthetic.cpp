#include "dermkit/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

namespace dermkit {

namespace {

using Rgb = std::array<double, 3>;

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq sseq{seed, stream};
  return std::mt19937_64(sseq);
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

void paint(Image& img, int y, int x, const Rgb& c) {
  for (int k = 0; k < 3; ++k) img.at(k, y, x) = c[k];
}

void add_noise(Image& img, std::mt19937_64& rng, double sigma) {
  std::normal_distribution<double> noise(0.0, sigma);
  for (double& v : img.data) v = std::clamp(v + noise(rng), 0.0, 1.0);
}

Rgb mix(const Rgb& a, const Rgb& b, double t) {
  return {a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t, a[2] + (b[2] - a[2]) * t};
}

}  // namespace

Image texture_patch(FeatureClass cls, std::uint64_t seed) {
  auto rng = make_rng(seed, static_cast<std::uint64_t>(cls));
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const int side = kPatchSide;
  Rgb base{};
  for (double& v : base) v = uniform(rng, 0.25, 0.75);
  const double sign = rng() & 1u ? 1.0 : -1.0;
  const double contrast = uniform(rng, 0.2, 0.35);
  Rgb ink{};
  for (int k = 0; k < 3; ++k) ink[k] = std::clamp(base[k] + sign * contrast, 0.0, 1.0);
  const double period = uniform(rng, 6.0, 12.0);
  const double phase = uniform(rng, 0.0, two_pi);
  const double cy = side / 2.0 + uniform(rng, -8.0, 8.0);
  const double cx = side / 2.0 + uniform(rng, -8.0, 8.0);
  const double oy = uniform(rng, 0.0, period);
  const double ox = uniform(rng, 0.0, period);

  Image img(side, side);
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      double t = 0.0;
      switch (cls) {
        case FeatureClass::B:
          t = 0.1 * (x + y) / (2.0 * side);
          break;
        case FeatureClass::PN:
          t = 0.5 + 0.5 * std::sin(two_pi * y / period + phase);
          break;
        case FeatureClass::NN:
          t = 0.5 + 0.5 * std::sin(two_pi * (x + y) / (std::numbers::sqrt2 * period) + phase);
          break;
        case FeatureClass::MC: {
          const double py = std::fmod(y + oy, period) - period / 2;
          const double px = std::fmod(x + ox, period) - period / 2;
          t = std::hypot(py, px) < 0.3 * period ? 1.0 : 0.0;
          break;
        }
        case FeatureClass::S:
          t = 0.5 + 0.5 * std::sin(two_pi * std::hypot(y - cy, x - cx) / period + phase);
          break;
      }
      paint(img, y, x, mix(base, ink, t));
    }
  }
  add_noise(img, rng, 0.05);
  return img;
}

PatchSource texture_patch_source(std::size_t per_class, std::uint64_t seed) {
  PatchSource src;
  src.labels.resize(per_class * kFeatureClasses);
  for (std::size_t i = 0; i < src.labels.size(); ++i) {
    src.labels[i] = static_cast<FeatureClass>(i % kFeatureClasses);
  }
  src.load = [seed](std::size_t i) {
    return texture_patch(static_cast<FeatureClass>(i % kFeatureClasses),
                         seed * 0x9e3779b97f4a7c15ULL + i);
  };
  return src;
}

LesionSample blob_sample(LesionClass cls, std::uint64_t seed, const BlobOptions& options) {
  static const std::array<Rgb, kLesionClasses> colour{{
      {0.22, 0.13, 0.10},  // melanoma: dark brown
      {0.55, 0.55, 0.30},  // seborrheic keratosis: olive
      {0.75, 0.35, 0.30},  // nevus: red-brown
  }};
  const Rgb skin{0.92, 0.76, 0.66};
  auto rng = make_rng(seed, 100 + static_cast<std::uint64_t>(cls));
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const int side = options.side;
  const double radius = side * uniform(rng, 0.18, 0.30);
  const double cy = side / 2.0 + uniform(rng, -0.12, 0.12) * side;
  const double cx = side / 2.0 + uniform(rng, -0.12, 0.12) * side;
  const double a3 = uniform(rng, 0.0, 0.12);
  const double p3 = uniform(rng, 0.0, two_pi);
  const double a5 = uniform(rng, 0.0, 0.06);
  const double p5 = uniform(rng, 0.0, two_pi);
  const int k = static_cast<int>(cls);
  const Rgb inner = colour[k];
  const Rgb outer = options.corrupt_boundary ? colour[(k + 1) % kLesionClasses] : inner;
  Rgb background = skin;
  for (double& v : background) v += uniform(rng, -0.05, 0.05);

  LesionSample s;
  s.label = cls;
  s.image = Image(side, side);
  s.mask = BinaryMask(side, side);
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      const double dy = y - cy;
      const double dx = x - cx;
      const double theta = std::atan2(dy, dx);
      const double edge =
          radius * (1.0 + a3 * std::sin(3 * theta + p3) + a5 * std::sin(5 * theta + p5));
      const double rho = std::hypot(dy, dx) / edge;
      if (rho <= 1.0) {
        s.mask.at(y, x) = 1;
        // Speckle texture for seborrheic keratosis.
        Rgb c = rho > 0.65 ? outer : inner;
        if (cls == LesionClass::seborrheic_keratosis && ((x / 3 + y / 3) % 2 == 0)) {
          for (double& v : c) v *= 0.85;
        }
        paint(s.image, y, x, c);
      } else {
        paint(s.image, y, x, background);
      }
    }
  }
  add_noise(s.image, rng, 0.06);
  return s;
}

}  // namespace dermkit
