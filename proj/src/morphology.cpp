#include "dermkit/morphology.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace dermkit {

namespace {

bool is_border(const BinaryMask& m, int y, int x) {
  if (!m.at(y, x)) return false;
  if (y == 0 || x == 0 || y == m.height - 1 || x == m.width - 1) return true;
  return !m.at(y - 1, x) || !m.at(y + 1, x) || !m.at(y, x - 1) || !m.at(y, x + 1);
}

// 1-D lower envelope of parabolas (Felzenszwalb & Huttenlocher). f holds
// squared distances (or +inf); d receives min_q (p - q)^2 + f[q].
void edt_1d(const std::vector<double>& f, std::vector<double>& d,
            std::vector<int>& v, std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  constexpr double inf = std::numeric_limits<double>::infinity();
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] == inf) continue;
    while (k >= 0) {
      const int p = v[k];
      const double s = ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * (q - p));
      if (s <= z[k]) {
        --k;
      } else {
        break;
      }
    }
    ++k;
    v[k] = q;
    z[k] = k == 0 ? -inf
                  : ((f[q] + double(q) * q) - (f[v[k - 1]] + double(v[k - 1]) * v[k - 1])) /
                        (2.0 * (q - v[k - 1]));
    z[k + 1] = inf;
  }
  if (k < 0) {
    std::fill(d.begin(), d.end(), inf);
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[j + 1] < q) ++j;
    const double dq = double(q) - v[j];
    d[q] = dq * dq + f[v[j]];
  }
}

}  // namespace

std::vector<Pixel> extract_border(const BinaryMask& mask) {
  std::vector<Pixel> out;
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (is_border(mask, y, x)) out.push_back({y, x});
    }
  }
  return out;
}

DistanceMap distance_map(const BinaryMask& mask) {
  const int h = mask.height;
  const int w = mask.width;
  DistanceMap out(h, w);
  if (h == 0 || w == 0) return out;
  constexpr double inf = std::numeric_limits<double>::infinity();
  Grid<double> sq(h, w, inf);
  bool any = false;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (is_border(mask, y, x)) {
        sq.at(y, x) = 0.0;
        any = true;
      }
    }
  }
  if (!any) return out;
  const int n = std::max(h, w);
  std::vector<int> v(n);
  std::vector<double> z(n + 1);
  std::vector<double> f, d;
  f.resize(h);
  d.resize(h);
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) f[y] = sq.at(y, x);
    edt_1d(f, d, v, z);
    for (int y = 0; y < h; ++y) sq.at(y, x) = d[y];
  }
  f.resize(w);
  d.resize(w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) f[x] = sq.at(y, x);
    edt_1d(f, d, v, z);
    for (int x = 0; x < w; ++x) {
      out.at(y, x) = mask.at(y, x) ? std::sqrt(d[x]) : 0.0;
    }
  }
  return out;
}

BinaryMask fill_holes(const BinaryMask& mask) {
  const int h = mask.height;
  const int w = mask.width;
  // 1 = background reachable from the image boundary
  Grid<std::uint8_t> outside(h, w, 0);
  std::deque<Pixel> queue;
  auto seed = [&](int y, int x) {
    if (!mask.at(y, x) && !outside.at(y, x)) {
      outside.at(y, x) = 1;
      queue.push_back({y, x});
    }
  };
  for (int y = 0; y < h; ++y) {
    seed(y, 0);
    seed(y, w - 1);
  }
  for (int x = 0; x < w; ++x) {
    seed(0, x);
    seed(h - 1, x);
  }
  constexpr int dy[4] = {-1, 1, 0, 0};
  constexpr int dx[4] = {0, 0, -1, 1};
  while (!queue.empty()) {
    const Pixel p = queue.front();
    queue.pop_front();
    for (int k = 0; k < 4; ++k) {
      const int ny = p.y + dy[k];
      const int nx = p.x + dx[k];
      if (ny >= 0 && ny < h && nx >= 0 && nx < w) seed(ny, nx);
    }
  }
  BinaryMask out(h, w);
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = !outside.data[i];
  return out;
}

BinaryMask largest_component(const BinaryMask& mask) {
  const int h = mask.height;
  const int w = mask.width;
  Grid<std::int32_t> comp(h, w, -1);
  int best = -1;
  std::size_t best_size = 0;
  int next = 0;
  std::vector<Pixel> stack;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask.at(y, x) || comp.at(y, x) >= 0) continue;
      const int id = next++;
      std::size_t size = 0;
      comp.at(y, x) = id;
      stack.push_back({y, x});
      while (!stack.empty()) {
        const Pixel p = stack.back();
        stack.pop_back();
        ++size;
        for (int ddy = -1; ddy <= 1; ++ddy) {
          for (int ddx = -1; ddx <= 1; ++ddx) {
            const int ny = p.y + ddy;
            const int nx = p.x + ddx;
            if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
            if (mask.at(ny, nx) && comp.at(ny, nx) < 0) {
              comp.at(ny, nx) = id;
              stack.push_back({ny, nx});
            }
          }
        }
      }
      if (size > best_size) {
        best_size = size;
        best = id;
      }
    }
  }
  BinaryMask kept(h, w);
  if (best < 0) return kept;
  for (std::size_t i = 0; i < kept.size(); ++i) kept.data[i] = comp.data[i] == best;
  return fill_holes(kept);
}

Grid<double> normalized_for_display(const DistanceMap& d) {
  Grid<double> out = d;
  const double mx = d.data.empty() ? 0.0 : *std::max_element(d.data.begin(), d.data.end());
  if (mx > 0.0) {
    for (double& v : out.data) v /= mx;
  }
  return out;
}

}  // namespace dermkit
