#include "dermkit/transform.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "bilinear.hpp"

namespace dermkit {

namespace {

void require_size(int h, int w) {
  if (h < 1 || w < 1) throw std::invalid_argument("target size must be positive");
}

BinaryMask threshold(const Grid<double>& g) {
  BinaryMask m(g.height, g.width);
  for (std::size_t i = 0; i < g.size(); ++i) m.data[i] = g.data[i] >= 0.5;
  return m;
}

Grid<double> as_grid(const BinaryMask& mask) {
  Grid<double> g(mask.height, mask.width);
  for (std::size_t i = 0; i < mask.size(); ++i) g.data[i] = mask.data[i] ? 1.0 : 0.0;
  return g;
}

// Mirror a continuous coordinate into [0, n - 1] without repeating the edge.
double reflect(double t, int n) {
  if (n == 1) return 0.0;
  const double period = 2.0 * (n - 1);
  t = std::fmod(std::abs(t), period);
  return t > n - 1 ? period - t : t;
}

// Returns k in {0,1,2,3} when the angle is a multiple of 90 degrees.
int quarter_turns(double angle_deg) {
  double a = std::fmod(angle_deg, 360.0);
  if (a < 0) a += 360.0;
  const double k = std::round(a / 90.0);
  if (std::abs(a - 90.0 * k) > 1e-9) return -1;
  return static_cast<int>(k) % 4;
}

// Rotates `channels` planes; dst has the same size as src.
void rotate_planes(const std::vector<double>& src, int channels, int h, int w,
                   double angle_deg, std::vector<double>& dst) {
  dst.assign(src.size(), 0.0);
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  const int turns = quarter_turns(angle_deg);
  if (turns == 0 || turns == 2 || (turns > 0 && h == w)) {
    for (int c = 0; c < channels; ++c) {
      const double* s = src.data() + c * plane;
      double* d = dst.data() + c * plane;
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          int sy = y;
          int sx = x;
          switch (turns) {
            case 1: sy = x; sx = w - 1 - y; break;
            case 2: sy = h - 1 - y; sx = w - 1 - x; break;
            case 3: sy = h - 1 - x; sx = y; break;
            default: break;
          }
          d[static_cast<std::size_t>(y) * w + x] = s[static_cast<std::size_t>(sy) * w + sx];
        }
      }
    }
    return;
  }
  const double rad = angle_deg * std::numbers::pi / 180.0;
  const double cs = std::cos(rad);
  const double sn = std::sin(rad);
  const double cy = (h - 1) / 2.0;
  const double cx = (w - 1) / 2.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double dx = x - cx;
      const double dy = y - cy;
      const double sy = reflect(cy + dx * sn + dy * cs, h);
      const double sx = reflect(cx + dx * cs - dy * sn, w);
      const int y0 = static_cast<int>(std::floor(sy));
      const int x0 = static_cast<int>(std::floor(sx));
      const int y1 = std::min(y0 + 1, h - 1);
      const int x1 = std::min(x0 + 1, w - 1);
      const double fy = sy - y0;
      const double fx = sx - x0;
      for (int c = 0; c < channels; ++c) {
        const double* s = src.data() + c * plane;
        const double top = s[y0 * w + x0] + fx * (s[y0 * w + x1] - s[y0 * w + x0]);
        const double bot = s[y1 * w + x0] + fx * (s[y1 * w + x1] - s[y1 * w + x0]);
        dst[c * plane + static_cast<std::size_t>(y) * w + x] = top + fy * (bot - top);
      }
    }
  }
}

template <class T>
void flip_planes(const std::vector<T>& src, int channels, int h, int w,
                 FlipAxis axis, std::vector<T>& dst) {
  dst = src;
  if (axis == FlipAxis::none) return;
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (int c = 0; c < channels; ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const int sy = axis == FlipAxis::y ? h - 1 - y : y;
        const int sx = axis == FlipAxis::x ? w - 1 - x : x;
        dst[c * plane + static_cast<std::size_t>(y) * w + x] =
            src[c * plane + static_cast<std::size_t>(sy) * w + sx];
      }
    }
  }
}

template <class Raster>
void check_degenerate(const Raster& r) {
  if (r.height < 2 || r.width < 2) {
    throw std::invalid_argument("degenerate image " + std::to_string(r.height) +
                                "x" + std::to_string(r.width));
  }
}

}  // namespace

std::string_view to_string(FlipAxis axis) {
  switch (axis) {
    case FlipAxis::x: return "x";
    case FlipAxis::y: return "y";
    case FlipAxis::none: break;
  }
  return "none";
}

FlipAxis parse_flip_axis(std::string_view s) {
  if (s == "x") return FlipAxis::x;
  if (s == "y") return FlipAxis::y;
  if (s == "none" || s.empty()) return FlipAxis::none;
  throw std::invalid_argument("unknown flip axis '" + std::string(s) + "'");
}

Image resize_bilinear(const Image& img, int height, int width) {
  require_size(height, width);
  Image out(height, width);
  detail::resample_planes(img.data.data(), Image::kChannels, img.height,
                          img.width, out.data.data(), height, width);
  return out;
}

Grid<double> resize_bilinear(const Grid<double>& g, int height, int width) {
  require_size(height, width);
  Grid<double> out(height, width);
  detail::resample_planes(g.data.data(), 1, g.height, g.width, out.data.data(),
                          height, width);
  return out;
}

BinaryMask resize_mask(const BinaryMask& mask, int height, int width) {
  return threshold(resize_bilinear(as_grid(mask), height, width));
}

Image center_crop_resize(const Image& img, int side) {
  check_degenerate(img);
  require_size(side, side);
  const int crop = std::min(img.height, img.width);
  const int y0 = (img.height - crop) / 2;
  const int x0 = (img.width - crop) / 2;
  Image square(crop, crop);
  for (int c = 0; c < Image::kChannels; ++c) {
    for (int y = 0; y < crop; ++y) {
      for (int x = 0; x < crop; ++x) square.at(c, y, x) = img.at(c, y + y0, x + x0);
    }
  }
  return crop == side ? square : resize_bilinear(square, side, side);
}

BinaryMask center_crop_resize(const BinaryMask& mask, int side) {
  check_degenerate(mask);
  require_size(side, side);
  const int crop = std::min(mask.height, mask.width);
  const int y0 = (mask.height - crop) / 2;
  const int x0 = (mask.width - crop) / 2;
  BinaryMask square(crop, crop);
  for (int y = 0; y < crop; ++y) {
    for (int x = 0; x < crop; ++x) square.at(y, x) = mask.at(y + y0, x + x0);
  }
  return crop == side ? square : resize_mask(square, side, side);
}

std::pair<int, int> proportional_size(int height, int width, int long_side) {
  if (height < 1 || width < 1) throw std::invalid_argument("empty image");
  require_size(long_side, long_side);
  if (height >= width) {
    const int w = static_cast<int>(std::lround(static_cast<double>(width) * long_side / height));
    return {long_side, std::max(1, w)};
  }
  const int h = static_cast<int>(std::lround(static_cast<double>(height) * long_side / width));
  return {std::max(1, h), long_side};
}

Image resize_proportional(const Image& img, int long_side) {
  check_degenerate(img);
  const auto [h, w] = proportional_size(img.height, img.width, long_side);
  if (h == img.height && w == img.width) return img;
  return resize_bilinear(img, h, w);
}

Image rotate(const Image& img, double angle_deg) {
  Image out(img.height, img.width);
  rotate_planes(img.data, Image::kChannels, img.height, img.width, angle_deg, out.data);
  return out;
}

Grid<double> rotate(const Grid<double>& g, double angle_deg) {
  Grid<double> out(g.height, g.width);
  rotate_planes(g.data, 1, g.height, g.width, angle_deg, out.data);
  return out;
}

BinaryMask rotate(const BinaryMask& mask, double angle_deg) {
  return threshold(rotate(as_grid(mask), angle_deg));
}

Image flip(const Image& img, FlipAxis axis) {
  Image out(img.height, img.width);
  flip_planes(img.data, Image::kChannels, img.height, img.width, axis, out.data);
  return out;
}

BinaryMask flip(const BinaryMask& mask, FlipAxis axis) {
  BinaryMask out(mask.height, mask.width);
  flip_planes(mask.data, 1, mask.height, mask.width, axis, out.data);
  return out;
}

Image apply_transform(const Image& img, double angle_deg, FlipAxis axis) {
  Image r = angle_deg == 0.0 ? img : rotate(img, angle_deg);
  return axis == FlipAxis::none ? r : flip(r, axis);
}

BinaryMask apply_transform(const BinaryMask& mask, double angle_deg,
                           FlipAxis axis) {
  BinaryMask r = angle_deg == 0.0 ? mask : rotate(mask, angle_deg);
  return axis == FlipAxis::none ? r : flip(r, axis);
}

}  // namespace dermkit
