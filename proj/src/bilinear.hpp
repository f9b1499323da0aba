#pragma once

#include <cmath>
#include <vector>

namespace dermkit::detail {

// Two-tap linear interpolation weights along one axis with half-pixel
// centers: output sample o reads (1 - frac) * in[lo] + frac * in[hi].
struct AxisTap {
  int lo;
  int hi;
  double frac;
};

inline std::vector<AxisTap> bilinear_taps(int in, int out) {
  std::vector<AxisTap> taps(out);
  const double scale = static_cast<double>(in) / out;
  for (int o = 0; o < out; ++o) {
    double src = (o + 0.5) * scale - 0.5;
    if (src < 0.0) src = 0.0;
    int lo = static_cast<int>(std::floor(src));
    if (lo >= in - 1) {
      taps[o] = {in - 1, in - 1, 0.0};
    } else {
      taps[o] = {lo, lo + 1, src - lo};
    }
  }
  return taps;
}

// Resamples `channels` planes of size in_h x in_w to out_h x out_w.
inline void resample_planes(const double* src, int channels, int in_h,
                            int in_w, double* dst, int out_h, int out_w) {
  const auto ty = bilinear_taps(in_h, out_h);
  const auto tx = bilinear_taps(in_w, out_w);
  for (int c = 0; c < channels; ++c) {
    const double* s = src + static_cast<std::size_t>(c) * in_h * in_w;
    double* d = dst + static_cast<std::size_t>(c) * out_h * out_w;
    for (int y = 0; y < out_h; ++y) {
      const AxisTap& a = ty[y];
      const double* r0 = s + static_cast<std::size_t>(a.lo) * in_w;
      const double* r1 = s + static_cast<std::size_t>(a.hi) * in_w;
      for (int x = 0; x < out_w; ++x) {
        const AxisTap& b = tx[x];
        const double top = r0[b.lo] + b.frac * (r0[b.hi] - r0[b.lo]);
        const double bot = r1[b.lo] + b.frac * (r1[b.hi] - r1[b.lo]);
        d[static_cast<std::size_t>(y) * out_w + x] = top + a.frac * (bot - top);
      }
    }
  }
}

}  // namespace dermkit::detail
