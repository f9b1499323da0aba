#include "dermkit/engine.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

#include "bilinear.hpp"
#include "dermkit/error.hpp"

namespace dermkit {

namespace {

using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;
using VecMap = Eigen::Map<Eigen::VectorXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

// Output columns [lo, hi) whose input column ox * stride - pad + tap lies
// inside [0, w).
std::pair<int, int> valid_range(int w, int ow, int stride, int pad, int tap) {
  int lo = 0;
  while (lo < ow && lo * stride - pad + tap < 0) ++lo;
  int hi = ow;
  while (hi > lo && (hi - 1) * stride - pad + tap >= w) --hi;
  return {lo, hi};
}

// Unfolds output rows [oy0, oy1) of one C x H x W sample into rows of a
// (C*kh*kw) x ((oy1-oy0)*ow) row-major matrix with leading dimension `ld`,
// starting at column 0 of `col`.
void im2col(const double* x, const Shape& in, const LayerSpec& l, int oy0, int oy1,
            int ow, double* col, std::size_t ld) {
  const int s = l.stride;
  for (int c = 0; c < in.c; ++c) {
    const double* xc = x + static_cast<std::size_t>(c) * in.h * in.w;
    for (int ki = 0; ki < l.kernel_h; ++ki) {
      for (int kj = 0; kj < l.kernel_w; ++kj) {
        const auto [lo, hi] = valid_range(in.w, ow, s, l.padding, kj);
        double* row = col;
        col += ld;
        for (int oy = oy0; oy < oy1; ++oy) {
          const int iy = oy * s - l.padding + ki;
          double* out = row + static_cast<std::size_t>(oy - oy0) * ow;
          if (iy < 0 || iy >= in.h) {
            std::fill(out, out + ow, 0.0);
            continue;
          }
          const double* src = xc + static_cast<std::size_t>(iy) * in.w - l.padding + kj;
          std::fill(out, out + lo, 0.0);
          if (s == 1) {
            std::copy(src + lo, src + hi, out + lo);
          } else {
            for (int ox = lo; ox < hi; ++ox) out[ox] = src[ox * s];
          }
          std::fill(out + hi, out + ow, 0.0);
        }
      }
    }
  }
}

// Adjoint of im2col: accumulates the columns back into the sample.
void col2im(const double* col, std::size_t ld, const Shape& in, const LayerSpec& l,
            int oy0, int oy1, int ow, double* x) {
  const int s = l.stride;
  for (int c = 0; c < in.c; ++c) {
    double* xc = x + static_cast<std::size_t>(c) * in.h * in.w;
    for (int ki = 0; ki < l.kernel_h; ++ki) {
      for (int kj = 0; kj < l.kernel_w; ++kj) {
        const auto [lo, hi] = valid_range(in.w, ow, s, l.padding, kj);
        const double* row = col;
        col += ld;
        for (int oy = oy0; oy < oy1; ++oy) {
          const int iy = oy * s - l.padding + ki;
          if (iy < 0 || iy >= in.h) continue;
          const double* src = row + static_cast<std::size_t>(oy - oy0) * ow;
          double* dst = xc + static_cast<std::size_t>(iy) * in.w - l.padding + kj;
          if (s == 1) {
            for (int ox = lo; ox < hi; ++ox) dst[ox] += src[ox];
          } else {
            for (int ox = lo; ox < hi; ++ox) dst[ox * s] += src[ox];
          }
        }
      }
    }
  }
}

// Samples per GEMM. Large planes are processed one sample at a time in
// bands of output rows whose column matrix fits in L2 (512 KB); small ones
// are batched into a 1 MB column buffer.
constexpr std::size_t kBandBudget = std::size_t{1} << 16;

int samples_per_chunk(std::size_t k, std::size_t plane, int n) {
  if (plane >= 256) return 1;
  constexpr std::size_t budget = std::size_t{1} << 17;
  const std::size_t fit = std::max<std::size_t>(1, budget / std::max<std::size_t>(1, k * plane));
  return static_cast<int>(std::min<std::size_t>(fit, static_cast<std::size_t>(n)));
}

int band_rows(std::size_t k, int oh, int ow) {
  const std::size_t fit = kBandBudget / std::max<std::size_t>(1, k * static_cast<std::size_t>(ow));
  return static_cast<int>(std::clamp<std::size_t>(fit, 1, static_cast<std::size_t>(oh)));
}

// A 1x1, stride 1, unpadded kernel: the column matrix is the sample itself.
bool is_pointwise(const LayerSpec& l) {
  return l.kernel_h == 1 && l.kernel_w == 1 && l.stride == 1 && l.padding == 0;
}

using StridedMap = Eigen::Map<RowMat, 0, Eigen::OuterStride<>>;
using ConstStridedMap = Eigen::Map<const RowMat, 0, Eigen::OuterStride<>>;

Tensor conv_forward(const LayerSpec& l, const LayerParams& p, const Tensor& x,
                    const Shape& out_shape) {
  const Shape& in = x.shape();
  Tensor y = Tensor::uninitialized(out_shape);
  const std::size_t k = static_cast<std::size_t>(in.c) * l.kernel_h * l.kernel_w;
  const std::size_t plane = out_shape.plane_size();
  const auto kk = static_cast<Eigen::Index>(k);
  const auto cout = static_cast<Eigen::Index>(l.out_channels);
  const int chunk = samples_per_chunk(k, plane, in.n);
  const bool pointwise = is_pointwise(l);
  ConstMatMap weight(p.weight.data(), cout, kk);
  ConstVecMap bias(p.bias.data(), l.out_channels);

  if (chunk == 1) {
    const int rows = pointwise ? out_shape.h : band_rows(k, out_shape.h, out_shape.w);
    AlignedBuffer col(pointwise ? 0 : k * rows * out_shape.w);
    for (int n = 0; n < in.n; ++n) {
      double* yn = y.sample(n).data();
      for (int oy0 = 0; oy0 < out_shape.h; oy0 += rows) {
        const int oy1 = std::min(out_shape.h, oy0 + rows);
        const std::size_t off = static_cast<std::size_t>(oy0) * out_shape.w;
        const auto len = static_cast<Eigen::Index>((oy1 - oy0) * out_shape.w);
        StridedMap yband(yn + off, cout, len, Eigen::OuterStride<>(plane));
        if (pointwise) {
          yband.noalias() = weight * ConstStridedMap(x.sample(n).data() + off, kk, len,
                                                     Eigen::OuterStride<>(plane));
        } else {
          im2col(x.sample(n).data(), in, l, oy0, oy1, out_shape.w, col.data(), len);
          yband.noalias() = weight * ConstMatMap(col.data(), kk, len);
        }
        yband.colwise() += bias;
      }
    }
    return y;
  }

  AlignedBuffer col(k * plane * chunk);
  RowMat wide;
  for (int n0 = 0; n0 < in.n; n0 += chunk) {
    const int nb = std::min(chunk, in.n - n0);
    const std::size_t ld = plane * nb;
    for (int j = 0; j < nb; ++j) {
      im2col(x.sample(n0 + j).data(), in, l, 0, out_shape.h, out_shape.w,
             col.data() + j * plane, ld);
    }
    wide.noalias() = weight * ConstMatMap(col.data(), kk, static_cast<Eigen::Index>(ld));
    for (int j = 0; j < nb; ++j) {
      MatMap yn(y.sample(n0 + j).data(), cout, static_cast<Eigen::Index>(plane));
      yn = wide.middleCols(static_cast<Eigen::Index>(j * plane),
                           static_cast<Eigen::Index>(plane));
      yn.colwise() += bias;
    }
  }
  return y;
}

void conv_backward(const LayerSpec& l, const LayerParams& p, const Tensor& x,
                   const Tensor& dy, LayerParams& grad, Tensor* dx) {
  const Shape& in = x.shape();
  const Shape& os = dy.shape();
  const std::size_t k = static_cast<std::size_t>(in.c) * l.kernel_h * l.kernel_w;
  const std::size_t plane = os.plane_size();
  const auto kk = static_cast<Eigen::Index>(k);
  const auto cout = static_cast<Eigen::Index>(l.out_channels);
  const int chunk = samples_per_chunk(k, plane, in.n);
  const bool pointwise = is_pointwise(l);
  ConstMatMap weight(p.weight.data(), cout, kk);
  MatMap dweight(grad.weight.data(), cout, kk);
  VecMap dbias(grad.bias.data(), l.out_channels);
  RowMat dcol;

  if (chunk == 1) {
    const int rows = pointwise ? os.h : band_rows(k, os.h, os.w);
    AlignedBuffer col(pointwise ? 0 : k * rows * os.w);
    for (int n = 0; n < in.n; ++n) {
      const ConstMatMap dyn(dy.sample(n).data(), cout, static_cast<Eigen::Index>(plane));
      dbias += dyn.rowwise().sum();
      if (pointwise) {
        const ConstMatMap xn(x.sample(n).data(), kk, static_cast<Eigen::Index>(plane));
        dweight.noalias() += dyn * xn.transpose();
        if (dx) {
          MatMap(dx->sample(n).data(), kk, static_cast<Eigen::Index>(plane)).noalias() +=
              weight.transpose() * dyn;
        }
        continue;
      }
      for (int oy0 = 0; oy0 < os.h; oy0 += rows) {
        const int oy1 = std::min(os.h, oy0 + rows);
        const std::size_t off = static_cast<std::size_t>(oy0) * os.w;
        const auto len = static_cast<Eigen::Index>((oy1 - oy0) * os.w);
        const ConstStridedMap dyband(dy.sample(n).data() + off, cout, len,
                                     Eigen::OuterStride<>(plane));
        im2col(x.sample(n).data(), in, l, oy0, oy1, os.w, col.data(), len);
        dweight.noalias() += dyband * ConstMatMap(col.data(), kk, len).transpose();
        if (!dx) continue;
        dcol.noalias() = weight.transpose() * dyband;
        col2im(dcol.data(), len, in, l, oy0, oy1, os.w, dx->sample(n).data());
      }
    }
    return;
  }

  AlignedBuffer col(k * plane * chunk);
  RowMat dwide;
  for (int n0 = 0; n0 < in.n; n0 += chunk) {
    const int nb = std::min(chunk, in.n - n0);
    const std::size_t ld = plane * nb;
    const auto cols_ld = static_cast<Eigen::Index>(ld);
    dwide.resize(cout, cols_ld);
    for (int j = 0; j < nb; ++j) {
      im2col(x.sample(n0 + j).data(), in, l, 0, os.h, os.w, col.data() + j * plane, ld);
      dwide.middleCols(static_cast<Eigen::Index>(j * plane),
                       static_cast<Eigen::Index>(plane)) =
          ConstMatMap(dy.sample(n0 + j).data(), cout, static_cast<Eigen::Index>(plane));
    }
    dweight.noalias() += dwide * ConstMatMap(col.data(), kk, cols_ld).transpose();
    dbias += dwide.rowwise().sum();
    if (!dx) continue;
    dcol.noalias() = weight.transpose() * dwide;
    for (int j = 0; j < nb; ++j) {
      col2im(dcol.data() + j * plane, ld, in, l, 0, os.h, os.w, dx->sample(n0 + j).data());
    }
  }
}

Tensor batch_norm_forward(const LayerParams& p, const Tensor& x, Mode mode,
                          LayerCache* cache) {
  const Shape& s = x.shape();
  const auto plane = static_cast<Eigen::Index>(s.plane_size());
  const double m = static_cast<double>(s.n) * static_cast<double>(plane);
  Tensor y = Tensor::uninitialized(s);
  std::vector<double> mean(s.c), var(s.c), inv_std(s.c);
  auto slice = [&](const Tensor& t, int n, int c) {
    return ConstVecMap(t.data() + (static_cast<std::size_t>(n) * s.c + c) * plane, plane);
  };
  for (int c = 0; c < s.c; ++c) {
    if (mode == Mode::train) {
      double sum = 0.0;
      for (int n = 0; n < s.n; ++n) sum += slice(x, n, c).sum();
      const double mu = sum / m;
      double sq = 0.0;
      for (int n = 0; n < s.n; ++n) {
        sq += (slice(x, n, c).array() - mu).square().sum();
      }
      mean[c] = mu;
      var[c] = sq / m;
    } else {
      mean[c] = p.running_mean[c];
      var[c] = p.running_var[c];
    }
    inv_std[c] = 1.0 / std::sqrt(var[c] + kBatchNormEpsilon);
    const double scale = p.weight[c] * inv_std[c];
    const double shift = p.bias[c] - mean[c] * scale;
    for (int n = 0; n < s.n; ++n) {
      VecMap(y.data() + (static_cast<std::size_t>(n) * s.c + c) * plane, plane) =
          slice(x, n, c).array() * scale + shift;
    }
  }
  if (cache) {
    cache->mean = std::move(mean);
    cache->var = std::move(var);
    cache->inv_std = std::move(inv_std);
  }
  return y;
}

// With `accumulate` false, dx is overwritten instead of added to.
void batch_norm_backward(const LayerParams& p, const Tensor& x,
                         const Tensor& dy, const LayerCache& cache, Mode mode,
                         LayerParams& grad, Tensor* dx, bool accumulate) {
  const Shape& s = x.shape();
  const auto plane = static_cast<Eigen::Index>(s.plane_size());
  const double m = static_cast<double>(s.n) * static_cast<double>(plane);
  auto offset = [&](int n, int c) {
    return (static_cast<std::size_t>(n) * s.c + c) * plane;
  };
  for (int c = 0; c < s.c; ++c) {
    const double mu = cache.mean[c];
    const double is = cache.inv_std[c];
    double dbeta = 0.0;
    double dxc = 0.0;  // sum of dy * (x - mu)
    for (int n = 0; n < s.n; ++n) {
      const ConstVecMap g(dy.data() + offset(n, c), plane);
      const ConstVecMap xv(x.data() + offset(n, c), plane);
      dbeta += g.sum();
      dxc += (g.array() * (xv.array() - mu)).sum();
    }
    const double dgamma = dxc * is;
    grad.weight[c] += dgamma;
    grad.bias[c] += dbeta;
    if (!dx) continue;
    const double gamma = p.weight[c];
    for (int n = 0; n < s.n; ++n) {
      const ConstVecMap g(dy.data() + offset(n, c), plane);
      VecMap d(dx->data() + offset(n, c), plane);
      if (mode == Mode::train) {
        const ConstVecMap xv(x.data() + offset(n, c), plane);
        // gamma * is / m * (m * g - dbeta - xhat * dgamma)
        const auto v = (gamma * is) * g.array() - (gamma * is / m) * dbeta -
                       (gamma * is * is * is / m) * dxc * (xv.array() - mu);
        if (accumulate) d.array() += v;
        else d.array() = v;
      } else if (accumulate) {
        d.array() += (gamma * is) * g.array();
      } else {
        d.array() = (gamma * is) * g.array();
      }
    }
  }
}

Tensor max_pool_forward(const LayerSpec& l, const Tensor& x,
                        const Shape& os, LayerCache* cache) {
  const Shape& s = x.shape();
  Tensor y = Tensor::uninitialized(os);
  std::vector<std::int32_t> arg(os.size());
  for (int nc = 0; nc < s.n * s.c; ++nc) {
    const double* xp = x.data() + static_cast<std::size_t>(nc) * s.plane_size();
    double* yp = y.data() + static_cast<std::size_t>(nc) * os.plane_size();
    std::int32_t* ap = arg.data() + static_cast<std::size_t>(nc) * os.plane_size();
    for (int oy = 0; oy < os.h; ++oy) {
      for (int ox = 0; ox < os.w; ++ox) {
        double best = -std::numeric_limits<double>::infinity();
        std::int32_t where = 0;
        for (int i = 0; i < l.kernel_h; ++i) {
          const int iy = oy * l.stride + i;
          for (int j = 0; j < l.kernel_w; ++j) {
            const int ix = ox * l.stride + j;
            const double v = xp[iy * s.w + ix];
            if (v > best) {
              best = v;
              where = iy * s.w + ix;
            }
          }
        }
        yp[oy * os.w + ox] = best;
        ap[oy * os.w + ox] = where;
      }
    }
  }
  if (cache) cache->argmax = std::move(arg);
  return y;
}

Tensor avg_pool_forward(const LayerSpec& l, const Tensor& x, const Shape& os) {
  const Shape& s = x.shape();
  Tensor y(os);
  for (int nc = 0; nc < s.n * s.c; ++nc) {
    const double* xp = x.data() + static_cast<std::size_t>(nc) * s.plane_size();
    double* yp = y.data() + static_cast<std::size_t>(nc) * os.plane_size();
    if (l.global) {
      double sum = 0.0;
      for (std::size_t i = 0; i < s.plane_size(); ++i) sum += xp[i];
      yp[0] = sum / static_cast<double>(s.plane_size());
      continue;
    }
    const double inv = 1.0 / (l.kernel_h * l.kernel_w);
    for (int oy = 0; oy < os.h; ++oy) {
      for (int ox = 0; ox < os.w; ++ox) {
        double sum = 0.0;
        for (int i = 0; i < l.kernel_h; ++i) {
          for (int j = 0; j < l.kernel_w; ++j) {
            sum += xp[(oy * l.stride + i) * s.w + ox * l.stride + j];
          }
        }
        yp[oy * os.w + ox] = sum * inv;
      }
    }
  }
  return y;
}

void avg_pool_backward(const LayerSpec& l, const Tensor& dy, Tensor& dx) {
  const Shape& s = dx.shape();
  const Shape& os = dy.shape();
  for (int nc = 0; nc < s.n * s.c; ++nc) {
    double* dxp = dx.data() + static_cast<std::size_t>(nc) * s.plane_size();
    const double* dyp = dy.data() + static_cast<std::size_t>(nc) * os.plane_size();
    if (l.global) {
      const double g = dyp[0] / static_cast<double>(s.plane_size());
      for (std::size_t i = 0; i < s.plane_size(); ++i) dxp[i] += g;
      continue;
    }
    const double inv = 1.0 / (l.kernel_h * l.kernel_w);
    for (int oy = 0; oy < os.h; ++oy) {
      for (int ox = 0; ox < os.w; ++ox) {
        const double g = dyp[oy * os.w + ox] * inv;
        for (int i = 0; i < l.kernel_h; ++i) {
          for (int j = 0; j < l.kernel_w; ++j) {
            dxp[(oy * l.stride + i) * s.w + ox * l.stride + j] += g;
          }
        }
      }
    }
  }
}

Tensor dense_forward(const LayerSpec& l, const LayerParams& p, const Tensor& x,
                     const Shape& os) {
  const int n = x.shape().n;
  const int f = static_cast<int>(x.shape().sample_size());
  Tensor y(os);
  ConstMatMap in(x.data(), n, f);
  ConstMatMap weight(p.weight.data(), l.out_channels, f);
  MatMap out(y.data(), n, l.out_channels);
  out.noalias() = in * weight.transpose();
  out.rowwise() += ConstVecMap(p.bias.data(), l.out_channels).transpose();
  return y;
}

void dense_backward(const LayerSpec& l, const LayerParams& p, const Tensor& x,
                    const Tensor& dy, LayerParams& grad, Tensor* dx) {
  const int n = x.shape().n;
  const int f = static_cast<int>(x.shape().sample_size());
  ConstMatMap in(x.data(), n, f);
  ConstMatMap g(dy.data(), n, l.out_channels);
  MatMap(grad.weight.data(), l.out_channels, f).noalias() += g.transpose() * in;
  VecMap(grad.bias.data(), l.out_channels) += g.colwise().sum().transpose();
  if (dx) {
    MatMap(dx->data(), n, f).noalias() +=
        g * ConstMatMap(p.weight.data(), l.out_channels, f);
  }
}

Tensor upsample_forward(const Tensor& x, const Shape& os) {
  const Shape& s = x.shape();
  Tensor y(os);
  detail::resample_planes(x.data(), s.n * s.c, s.h, s.w, y.data(), os.h, os.w);
  return y;
}

void upsample_backward(const Tensor& dy, Tensor& dx) {
  const Shape& s = dx.shape();
  const Shape& os = dy.shape();
  const auto ty = detail::bilinear_taps(s.h, os.h);
  const auto tx = detail::bilinear_taps(s.w, os.w);
  for (int nc = 0; nc < s.n * s.c; ++nc) {
    double* d = dx.data() + static_cast<std::size_t>(nc) * s.plane_size();
    const double* g = dy.data() + static_cast<std::size_t>(nc) * os.plane_size();
    for (int y = 0; y < os.h; ++y) {
      const auto& a = ty[y];
      for (int x = 0; x < os.w; ++x) {
        const auto& b = tx[x];
        const double v = g[y * os.w + x];
        const double top = v * (1.0 - a.frac);
        const double bot = v * a.frac;
        d[a.lo * s.w + b.lo] += top * (1.0 - b.frac);
        d[a.lo * s.w + b.hi] += top * b.frac;
        d[a.hi * s.w + b.lo] += bot * (1.0 - b.frac);
        d[a.hi * s.w + b.hi] += bot * b.frac;
      }
    }
  }
}

// For each layer, the index of the last layer that reads its output.
std::vector<int> last_use(const NetworkSpec& net) {
  std::vector<int> last(net.layers.size());
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    last[i] = static_cast<int>(i) + 1;
  }
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const auto& l = net.layers[i];
    if (l.kind == LayerKind::residual_add && l.skip_from >= 0) {
      last[l.skip_from] = std::max(last[l.skip_from], static_cast<int>(i));
    }
  }
  return last;
}

Tensor run_layer(const NetworkSpec& net, const Parameters& params, int i,
                 const Tensor& x, const Tensor* skip, const Shape& os,
                 Mode mode, LayerCache* cache) {
  const LayerSpec& l = net.layers[i];
  const LayerParams& p = params.layers[i];
  switch (l.kind) {
    case LayerKind::conv:
      return conv_forward(l, p, x, os);
    case LayerKind::batch_norm:
      return batch_norm_forward(p, x, mode, cache);
    case LayerKind::relu: {
      Tensor y = Tensor::uninitialized(os);
      const double* xp = x.data();
      double* yp = y.data();
      for (std::size_t k = 0; k < y.size(); ++k) yp[k] = xp[k] > 0.0 ? xp[k] : 0.0;
      return y;
    }
    case LayerKind::max_pool: {
      if (l.global) {
        LayerSpec g = l;
        g.kernel_h = x.shape().h;
        g.kernel_w = x.shape().w;
        return max_pool_forward(g, x, os, cache);
      }
      return max_pool_forward(l, x, os, cache);
    }
    case LayerKind::avg_pool:
      return avg_pool_forward(l, x, os);
    case LayerKind::dense:
      return dense_forward(l, p, x, os);
    case LayerKind::upsample_bilinear:
      return upsample_forward(x, os);
    case LayerKind::residual_add: {
      Tensor y = x;
      const double* s = skip->data();
      double* d = y.data();
      for (std::size_t k = 0; k < y.size(); ++k) d[k] += s[k];
      return y;
    }
  }
  return x;
}

void check_finite(const Tensor& t, int layer, const NetworkSpec& net) {
  // These map finite inputs to finite outputs, and every input is checked.
  const LayerKind kind = net.layers[layer].kind;
  if (kind == LayerKind::relu || kind == LayerKind::max_pool) return;
  if (!t.all_finite()) {
    throw NonFiniteError(layer, "non-finite activation after " +
                                    std::string(to_string(net.layers[layer].kind)));
  }
}

}  // namespace

ForwardCache forward(const NetworkSpec& net, const Parameters& params,
                     const Tensor& batch, Mode mode) {
  if (net.layers.empty()) throw ShapeError(-1, "network has no layers");
  check_parameters(net, params);
  const auto shapes = infer_shapes(net, batch.shape());
  ForwardCache cache;
  cache.mode = mode;
  cache.input = batch;
  cache.outputs.reserve(net.layers.size());
  cache.aux.resize(net.layers.size());
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const int id = static_cast<int>(i);
    const Tensor& x = i == 0 ? cache.input : cache.outputs[i - 1];
    const Tensor* skip = nullptr;
    if (net.layers[i].kind == LayerKind::residual_add) {
      const int from = net.layers[i].skip_from;
      skip = from < 0 ? &cache.input : &cache.outputs[from];
    }
    cache.outputs.push_back(
        run_layer(net, params, id, x, skip, shapes[i], mode, &cache.aux[i]));
    check_finite(cache.outputs.back(), id, net);
  }
  return cache;
}

Tensor predict(const NetworkSpec& net, const Parameters& params,
               const Tensor& batch) {
  if (net.layers.empty()) throw ShapeError(-1, "network has no layers");
  check_parameters(net, params);
  const auto shapes = infer_shapes(net, batch.shape());
  const auto last = last_use(net);
  std::vector<Tensor> outputs(net.layers.size());
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const int id = static_cast<int>(i);
    const Tensor& x = i == 0 ? batch : outputs[i - 1];
    const Tensor* skip = nullptr;
    if (net.layers[i].kind == LayerKind::residual_add) {
      const int from = net.layers[i].skip_from;
      skip = from < 0 ? &batch : &outputs[from];
    }
    LayerCache scratch;
    outputs[i] = run_layer(net, params, id, x, skip, shapes[i], Mode::eval,
                           &scratch);
    check_finite(outputs[i], id, net);
    for (std::size_t j = 0; j < i; ++j) {
      if (last[j] <= id && !outputs[j].empty()) outputs[j] = Tensor();
    }
  }
  return std::move(outputs.back());
}

Parameters backward(const NetworkSpec& net, const Parameters& params,
                    const ForwardCache& cache, const Tensor& grad_output) {
  const std::size_t count = net.layers.size();
  if (cache.outputs.size() != count || cache.aux.size() != count) {
    throw ShapeError(-1, "forward cache does not belong to this network");
  }
  check_parameters(net, params);
  if (!(grad_output.shape() == cache.output().shape())) {
    throw ShapeError(static_cast<int>(count) - 1,
                     "output gradient shape " + grad_output.shape().str() +
                         " differs from output " +
                         cache.output().shape().str());
  }
  Parameters grads = zeros_like(params);
  std::vector<Tensor> g(count);
  g[count - 1] = grad_output;
  for (int i = static_cast<int>(count) - 1; i >= 0; --i) {
    if (g[i].empty()) continue;
    const LayerSpec& l = net.layers[i];
    const LayerParams& p = params.layers[i];
    const Tensor& x = i == 0 ? cache.input : cache.outputs[i - 1];
    const Tensor& y = cache.outputs[i];
    if (!(y.shape() == g[i].shape())) {
      throw ShapeError(i, "cache/network mismatch");
    }
    // The first gradient reaching an input can often be written directly
    // rather than accumulated into zeros.
    const bool fresh = i > 0 && g[i - 1].empty();
    if (fresh && l.kind == LayerKind::relu) {
      Tensor d = std::move(g[i]);
      const double* yp = y.data();
      double* dp = d.data();
      for (std::size_t k = 0; k < d.size(); ++k) dp[k] = yp[k] > 0.0 ? dp[k] : 0.0;
      g[i - 1] = std::move(d);
      continue;
    }
    Tensor* dx = nullptr;
    if (i > 0) {
      if (fresh) {
        g[i - 1] = l.kind == LayerKind::batch_norm ? Tensor::uninitialized(x.shape())
                                                   : Tensor(x.shape());
      }
      dx = &g[i - 1];
    }
    const Tensor& dy = g[i];
    switch (l.kind) {
      case LayerKind::conv:
        conv_backward(l, p, x, dy, grads.layers[i], dx);
        break;
      case LayerKind::batch_norm:
        batch_norm_backward(p, x, dy, cache.aux[i], cache.mode,
                            grads.layers[i], dx, !fresh);
        break;
      case LayerKind::relu:
        if (dx) {
          const double* yp = y.data();
          const double* gp = dy.data();
          double* dp = dx->data();
          for (std::size_t k = 0; k < y.size(); ++k) dp[k] += yp[k] > 0.0 ? gp[k] : 0.0;
        }
        break;
      case LayerKind::max_pool:
        if (dx) {
          const Shape& s = x.shape();
          const Shape& os = y.shape();
          for (int nc = 0; nc < s.n * s.c; ++nc) {
            double* d = dx->data() + static_cast<std::size_t>(nc) * s.plane_size();
            const std::size_t base = static_cast<std::size_t>(nc) * os.plane_size();
            for (std::size_t k = 0; k < os.plane_size(); ++k) {
              d[cache.aux[i].argmax[base + k]] += dy[base + k];
            }
          }
        }
        break;
      case LayerKind::avg_pool:
        if (dx) avg_pool_backward(l, dy, *dx);
        break;
      case LayerKind::dense:
        dense_backward(l, p, x, dy, grads.layers[i], dx);
        break;
      case LayerKind::upsample_bilinear:
        if (dx) upsample_backward(dy, *dx);
        break;
      case LayerKind::residual_add:
        if (dx) {
          for (std::size_t k = 0; k < dy.size(); ++k) (*dx)[k] += dy[k];
        }
        if (l.skip_from >= 0) {
          Tensor& gs = g[l.skip_from];
          if (gs.empty()) gs = Tensor(dy.shape());
          for (std::size_t k = 0; k < dy.size(); ++k) gs[k] += dy[k];
        }
        break;
    }
    g[i] = Tensor();
  }
  return grads;
}

void update_running_stats(const NetworkSpec& net, Parameters& params,
                          const ForwardCache& cache, double momentum) {
  if (cache.mode != Mode::train) return;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    if (net.layers[i].kind != LayerKind::batch_norm) continue;
    const Shape& s = cache.outputs[i].shape();
    const double m = static_cast<double>(s.n) * s.plane_size();
    const double unbias = m > 1.0 ? m / (m - 1.0) : 1.0;
    LayerParams& p = params.layers[i];
    for (int c = 0; c < s.c; ++c) {
      p.running_mean[c] =
          momentum * p.running_mean[c] + (1.0 - momentum) * cache.aux[i].mean[c];
      p.running_var[c] = momentum * p.running_var[c] +
                         (1.0 - momentum) * cache.aux[i].var[c] * unbias;
    }
  }
}

}  // namespace dermkit
