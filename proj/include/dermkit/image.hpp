#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "dermkit/tensor.hpp"

namespace dermkit {

// Single-channel raster, row-major.
template <class T>
struct Grid {
  int height = 0;
  int width = 0;
  std::vector<T> data;

  Grid() = default;
  Grid(int h, int w, T fill = T{})
      : height(h), width(w), data(static_cast<std::size_t>(h) * w, fill) {
    if (h < 0 || w < 0) throw std::invalid_argument("negative grid size");
  }

  T& at(int y, int x) { return data[static_cast<std::size_t>(y) * width + x]; }
  const T& at(int y, int x) const {
    return data[static_cast<std::size_t>(y) * width + x];
  }
  std::size_t size() const { return data.size(); }
  bool same_size(int h, int w) const { return height == h && width == w; }

  friend bool operator==(const Grid&, const Grid&) = default;
};

// true (1) = lesion
using BinaryMask = Grid<std::uint8_t>;
// Euclidean distance to the nearest lesion border; zero off the lesion.
using DistanceMap = Grid<double>;
// Superpixel id per pixel.
using LabelMap = Grid<std::int32_t>;

// 3-channel image, channel-planar (RGB planes), values in [0, 1].
struct Image {
  static constexpr int kChannels = 3;

  int height = 0;
  int width = 0;
  std::vector<double> data;

  Image() = default;
  Image(int h, int w, double fill = 0.0);

  double& at(int c, int y, int x) {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  double at(int c, int y, int x) const {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  std::size_t plane_size() const {
    return static_cast<std::size_t>(height) * width;
  }

  friend bool operator==(const Image&, const Image&) = default;
};

// Throws if any value lies outside [0, 1] or is not finite.
void check_image(const Image& img);

// Stacks same-sized images into an N x 3 x H x W tensor.
Tensor to_tensor(std::span<const Image> images);
Tensor to_tensor(const Image& image);

// Channel c of sample n of an N x C x H x W tensor as a grid.
Grid<double> channel(const Tensor& t, int n, int c);

std::vector<std::uint8_t> to_mask_bytes(const BinaryMask& mask);

}  // namespace dermkit
