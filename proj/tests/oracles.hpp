// Independent reference implementations used to check the library.
// These favour obviousness over speed.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "dermkit/image.hpp"

namespace oracle {

// Lesion pixels touching background (or the image edge) through a
// 4-neighbour.
inline std::vector<std::pair<int, int>> border(const dermkit::BinaryMask& m) {
  std::vector<std::pair<int, int>> out;
  auto lesion = [&](int y, int x) {
    return y >= 0 && y < m.height && x >= 0 && x < m.width && m.at(y, x) != 0;
  };
  for (int y = 0; y < m.height; ++y) {
    for (int x = 0; x < m.width; ++x) {
      if (!lesion(y, x)) continue;
      if (!lesion(y - 1, x) || !lesion(y + 1, x) || !lesion(y, x - 1) || !lesion(y, x + 1)) {
        out.emplace_back(y, x);
      }
    }
  }
  return out;
}

// Distance from every lesion pixel to its nearest border pixel by
// exhaustive search.
inline dermkit::DistanceMap brute_force_distance(const dermkit::BinaryMask& m) {
  const auto b = border(m);
  dermkit::DistanceMap d(m.height, m.width, 0.0);
  for (int y = 0; y < m.height; ++y) {
    for (int x = 0; x < m.width; ++x) {
      if (!m.at(y, x)) continue;
      std::int64_t best = std::numeric_limits<std::int64_t>::max();
      for (const auto& [by, bx] : b) {
        const std::int64_t dy = y - by;
        const std::int64_t dx = x - bx;
        best = std::min(best, dy * dy + dx * dx);
      }
      d.at(y, x) = std::sqrt(static_cast<double>(best));
    }
  }
  return d;
}

// Mann-Whitney statistic by comparing every positive/negative pair.
inline double pair_count_auc(const std::vector<double>& s, const std::vector<int>& l) {
  double wins = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (l[i] != 1) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (l[j] != 0) continue;
      pairs += 1.0;
      if (s[i] > s[j]) wins += 1.0;
      else if (s[i] == s[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

struct Seg {
  double ac, ja, di, se, sp;
};

// AC = (TP+TN)/all, JA = TP/(TP+FN+FP), DI = 2TP/(2TP+FN+FP),
// SE = TP/(TP+FN), SP = TN/(TN+FP), with the empty-denominator conventions.
inline Seg direct_seg(double tp, double tn, double fp, double fn) {
  Seg s{};
  s.ac = tp + tn + fp + fn == 0 ? 1.0 : (tp + tn) / (tp + tn + fp + fn);
  s.ja = tp + fn + fp == 0 ? 1.0 : tp / (tp + fn + fp);
  s.di = tp + fn + fp == 0 ? 1.0 : 2 * tp / (2 * tp + fn + fp);
  s.se = tp + fn == 0 ? 1.0 : tp / (tp + fn);
  s.sp = tn + fp == 0 ? 1.0 : tn / (tn + fp);
  return s;
}

// Per-pixel normalization of three class values.
inline std::array<double, 3> direct_normalize(double a, double b, double c) {
  const double lo = std::min({a, b, c});
  const double den = (a - lo) + (b - lo) + (c - lo);
  if (den == 0) return {1.0 / 3, 1.0 / 3, 1.0 / 3};
  return {(a - lo) / den, (b - lo) / den, (c - lo) / den};
}

// Bilinear resampling with half-pixel centres written out per pixel.
inline double sample_bilinear(const std::vector<double>& plane, int h, int w,
                              double sy, double sx) {
  sy = std::max(sy, 0.0);
  sx = std::max(sx, 0.0);
  const int y0 = std::min(static_cast<int>(sy), h - 1);
  const int x0 = std::min(static_cast<int>(sx), w - 1);
  const int y1 = std::min(y0 + 1, h - 1);
  const int x1 = std::min(x0 + 1, w - 1);
  const double fy = y0 == h - 1 ? 0.0 : sy - y0;
  const double fx = x0 == w - 1 ? 0.0 : sx - x0;
  auto at = [&](int y, int x) { return plane[static_cast<std::size_t>(y) * w + x]; };
  return (1 - fy) * ((1 - fx) * at(y0, x0) + fx * at(y0, x1)) +
         fy * ((1 - fx) * at(y1, x0) + fx * at(y1, x1));
}

inline std::vector<double> resample(const std::vector<double>& plane, int h, int w,
                                    int oh, int ow) {
  std::vector<double> out(static_cast<std::size_t>(oh) * ow);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      const double sy = (y + 0.5) * h / oh - 0.5;
      const double sx = (x + 0.5) * w / ow - 0.5;
      out[static_cast<std::size_t>(y) * ow + x] = sample_bilinear(plane, h, w, sy, sx);
    }
  }
  return out;
}

// Index of the nearest centre for every pixel (ties: lowest index).
inline std::vector<int> nearest_center(int h, int w,
                                       const std::vector<std::pair<double, double>>& c) {
  std::vector<int> out(static_cast<std::size_t>(h) * w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double best = std::numeric_limits<double>::infinity();
      int arg = 0;
      for (std::size_t k = 0; k < c.size(); ++k) {
        const double d = (y - c[k].first) * (y - c[k].first) + (x - c[k].second) * (x - c[k].second);
        if (d < best) {
          best = d;
          arg = static_cast<int>(k);
        }
      }
      out[static_cast<std::size_t>(y) * w + x] = arg;
    }
  }
  return out;
}

// True when two labelings induce the same partition of the pixels.
inline bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) return false;
  std::vector<std::pair<int, int>> fwd;
  std::vector<std::pair<int, int>> bwd;
  auto check = [](std::vector<std::pair<int, int>>& map, int from, int to) {
    for (auto& [f, t] : map) {
      if (f == from) return t == to;
    }
    map.emplace_back(from, to);
    return true;
  };
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!check(fwd, a[i], b[i]) || !check(bwd, b[i], a[i])) return false;
  }
  return true;
}

// Every label's pixels form exactly one 4-connected component.
inline bool labels_connected(const dermkit::LabelMap& labels) {
  const int h = labels.height;
  const int w = labels.width;
  std::vector<char> seen(labels.size(), 0);
  std::vector<char> label_done;
  for (int start = 0; start < h * w; ++start) {
    if (seen[start]) continue;
    const int l = labels.data[start];
    if (l < 0) return false;
    if (static_cast<std::size_t>(l) >= label_done.size()) label_done.resize(l + 1, 0);
    if (label_done[l]) return false;  // second component of the same label
    label_done[l] = 1;
    std::vector<int> stack{start};
    seen[start] = 1;
    while (!stack.empty()) {
      const int p = stack.back();
      stack.pop_back();
      const int y = p / w;
      const int x = p % w;
      const int nb[4][2] = {{y - 1, x}, {y + 1, x}, {y, x - 1}, {y, x + 1}};
      for (const auto& q : nb) {
        if (q[0] < 0 || q[0] >= h || q[1] < 0 || q[1] >= w) continue;
        const int qi = q[0] * w + q[1];
        if (!seen[qi] && labels.data[qi] == l) {
          seen[qi] = 1;
          stack.push_back(qi);
        }
      }
    }
  }
  return true;
}

}  // namespace oracle
