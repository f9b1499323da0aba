#include "dermkit/image.hpp"

#include <algorithm>
#include <cmath>

namespace dermkit {

Image::Image(int h, int w, double fill)
    : height(h), width(w), data(static_cast<std::size_t>(h) * w * kChannels, fill) {
  if (h < 0 || w < 0) throw std::invalid_argument("negative image size");
}

void check_image(const Image& img) {
  if (img.data.size() != img.plane_size() * Image::kChannels) {
    throw std::invalid_argument("image buffer does not match its size");
  }
  for (double v : img.data) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw std::invalid_argument("image values must lie in [0, 1]");
    }
  }
}

Tensor to_tensor(std::span<const Image> images) {
  if (images.empty()) throw std::invalid_argument("no images");
  const int h = images[0].height;
  const int w = images[0].width;
  Tensor t({static_cast<int>(images.size()), Image::kChannels, h, w});
  for (std::size_t n = 0; n < images.size(); ++n) {
    if (images[n].height != h || images[n].width != w) {
      throw std::invalid_argument("images in a batch must share one size");
    }
    std::copy(images[n].data.begin(), images[n].data.end(),
              t.sample(static_cast<int>(n)).begin());
  }
  return t;
}

Tensor to_tensor(const Image& image) {
  return to_tensor(std::span<const Image>(&image, 1));
}

Grid<double> channel(const Tensor& t, int n, int c) {
  const Shape& s = t.shape();
  Grid<double> g(s.h, s.w);
  const double* src = t.sample(n).data() + static_cast<std::size_t>(c) * s.plane_size();
  std::copy(src, src + s.plane_size(), g.data.begin());
  return g;
}

std::vector<std::uint8_t> to_mask_bytes(const BinaryMask& mask) {
  std::vector<std::uint8_t> out(mask.size());
  std::transform(mask.data.begin(), mask.data.end(), out.begin(),
                 [](std::uint8_t v) -> std::uint8_t { return v ? 255 : 0; });
  return out;
}

}  // namespace dermkit
