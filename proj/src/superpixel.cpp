#include "dermkit/superpixel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "dermkit/csv.hpp"
#include "dermkit/error.hpp"
#include "dermkit/transform.hpp"

namespace dermkit {

std::string_view to_string(FeatureClass c) {
  switch (c) {
    case FeatureClass::B: return "B";
    case FeatureClass::PN: return "PN";
    case FeatureClass::NN: return "NN";
    case FeatureClass::MC: return "MC";
    case FeatureClass::S: return "S";
  }
  return "?";
}

FeatureClass parse_feature_class(std::string_view s) {
  for (int k = 0; k < kFeatureClasses; ++k) {
    if (to_string(static_cast<FeatureClass>(k)) == s) return static_cast<FeatureClass>(k);
  }
  throw std::invalid_argument("unknown feature class '" + std::string(s) + "'");
}

std::array<double, 3> srgb_to_lab(double r, double g, double b) {
  auto linear = [](double c) {
    return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
  };
  const double lr = linear(r);
  const double lg = linear(g);
  const double lb = linear(b);
  const double x = (0.4124564 * lr + 0.3575761 * lg + 0.1804375 * lb) / 0.95047;
  const double y = 0.2126729 * lr + 0.7151522 * lg + 0.0721750 * lb;
  const double z = (0.0193339 * lr + 0.1191920 * lg + 0.9503041 * lb) / 1.08883;
  auto f = [](double t) {
    constexpr double e = 216.0 / 24389.0;
    constexpr double k = 24389.0 / 27.0;
    return t > e ? std::cbrt(t) : (k * t + 16.0) / 116.0;
  };
  const double fx = f(x);
  const double fy = f(y);
  const double fz = f(z);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

namespace {

struct Center {
  double l, a, b, y, x;
};

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int v) {
    while (parent[v] != v) {
      parent[v] = parent[parent[v]];
      v = parent[v];
    }
    return v;
  }
};

// 4-connected components of equal labels.
LabelMap components(const LabelMap& labels, std::vector<int>& sizes) {
  const int h = labels.height;
  const int w = labels.width;
  LabelMap comp(h, w, -1);
  sizes.clear();
  std::vector<int> stack;
  for (int start = 0; start < h * w; ++start) {
    if (comp.data[start] >= 0) continue;
    const int id = static_cast<int>(sizes.size());
    const int label = labels.data[start];
    int size = 0;
    comp.data[start] = id;
    stack.push_back(start);
    while (!stack.empty()) {
      const int p = stack.back();
      stack.pop_back();
      ++size;
      const int y = p / w;
      const int x = p % w;
      const int nb[4] = {y > 0 ? p - w : -1, y < h - 1 ? p + w : -1,
                         x > 0 ? p - 1 : -1, x < w - 1 ? p + 1 : -1};
      for (int q : nb) {
        if (q >= 0 && comp.data[q] < 0 && labels.data[q] == label) {
          comp.data[q] = id;
          stack.push_back(q);
        }
      }
    }
    sizes.push_back(size);
  }
  return comp;
}

LabelMap enforce_connectivity(const LabelMap& assignment) {
  const int h = assignment.height;
  const int w = assignment.width;
  std::vector<int> sizes;
  const LabelMap comp = components(assignment, sizes);
  const int ncomp = static_cast<int>(sizes.size());

  // The largest piece of each cluster keeps it; the rest are orphans.
  std::vector<int> cluster_of(ncomp);
  std::vector<int> first_pixel(ncomp, -1);
  for (int p = 0; p < h * w; ++p) {
    const int c = comp.data[p];
    if (first_pixel[c] < 0) {
      first_pixel[c] = p;
      cluster_of[c] = assignment.data[p];
    }
  }
  std::map<int, int> main_piece;
  for (int c = 0; c < ncomp; ++c) {
    auto [it, inserted] = main_piece.try_emplace(cluster_of[c], c);
    if (!inserted && sizes[c] > sizes[it->second]) it->second = c;
  }
  std::vector<std::vector<int>> pixels(ncomp);
  for (int p = 0; p < h * w; ++p) pixels[comp.data[p]].push_back(p);

  UnionFind uf(ncomp);
  std::map<int, int> shared;
  for (int c = 0; c < ncomp; ++c) {
    if (main_piece[cluster_of[c]] == c) continue;
    shared.clear();
    const int self = uf.find(c);
    for (int p : pixels[c]) {
      const int y = p / w;
      const int x = p % w;
      const int nb[4] = {y > 0 ? p - w : -1, y < h - 1 ? p + w : -1,
                         x > 0 ? p - 1 : -1, x < w - 1 ? p + 1 : -1};
      for (int q : nb) {
        if (q < 0) continue;
        const int r = uf.find(comp.data[q]);
        if (r != self) ++shared[r];
      }
    }
    int target = -1;
    int best = 0;
    for (const auto& [root, count] : shared) {
      if (count > best) {
        best = count;
        target = root;
      }
    }
    if (target >= 0) uf.parent[self] = target;
  }

  LabelMap out(h, w);
  std::vector<int> relabel(ncomp, -1);
  int next = 0;
  for (int p = 0; p < h * w; ++p) {
    const int r = uf.find(comp.data[p]);
    if (relabel[r] < 0) relabel[r] = next++;
    out.data[p] = relabel[r];
  }
  return out;
}

}  // namespace

LabelMap slic(const Image& img, const SlicOptions& options) {
  const int h = img.height;
  const int w = img.width;
  const long long n = static_cast<long long>(h) * w;
  if (n == 0) throw std::invalid_argument("slic: empty image");
  if (options.superpixels < 1 || options.superpixels > n) {
    throw std::invalid_argument("slic: superpixel count must lie in [1, h*w]");
  }
  if (!(options.compactness > 0.0)) {
    throw std::invalid_argument("slic: compactness must be positive");
  }
  std::vector<std::array<double, 3>> lab(n);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      lab[static_cast<std::size_t>(y) * w + x] =
          srgb_to_lab(img.at(0, y, x), img.at(1, y, x), img.at(2, y, x));
    }
  }
  const double step = std::sqrt(static_cast<double>(n) / options.superpixels);
  const int rows = std::max(1, static_cast<int>(std::lround(h / step)));
  const int cols = std::max(1, static_cast<int>(std::lround(w / step)));

  auto gradient = [&](int y, int x) {
    const auto& l = lab[static_cast<std::size_t>(y) * w + std::max(x - 1, 0)];
    const auto& r = lab[static_cast<std::size_t>(y) * w + std::min(x + 1, w - 1)];
    const auto& u = lab[static_cast<std::size_t>(std::max(y - 1, 0)) * w + x];
    const auto& d = lab[static_cast<std::size_t>(std::min(y + 1, h - 1)) * w + x];
    double g = 0.0;
    for (int c = 0; c < 3; ++c) g += (r[c] - l[c]) * (r[c] - l[c]) + (d[c] - u[c]) * (d[c] - u[c]);
    return g;
  };

  std::vector<Center> centers;
  centers.reserve(static_cast<std::size_t>(rows) * cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      double cy = (i + 0.5) * h / rows - 0.5;
      double cx = (j + 0.5) * w / cols - 0.5;
      const int py = std::clamp(static_cast<int>(std::lround(cy)), 0, h - 1);
      const int px = std::clamp(static_cast<int>(std::lround(cx)), 0, w - 1);
      double best = gradient(py, px);
      int by = -1;
      int bx = -1;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int yy = py + dy;
          const int xx = px + dx;
          if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
          const double g = gradient(yy, xx);
          if (g < best) {
            best = g;
            by = yy;
            bx = xx;
          }
        }
      }
      if (by >= 0) {
        cy = by;
        cx = bx;
      }
      const auto& c = lab[static_cast<std::size_t>(std::lround(cy)) * w + std::lround(cx)];
      centers.push_back({c[0], c[1], c[2], cy, cx});
    }
  }

  const double spatial = (options.compactness / step) * (options.compactness / step);
  auto dist2 = [&](const Center& c, std::size_t p, int y, int x) {
    const auto& v = lab[p];
    const double dc = (v[0] - c.l) * (v[0] - c.l) + (v[1] - c.a) * (v[1] - c.a) +
                      (v[2] - c.b) * (v[2] - c.b);
    const double ds = (y - c.y) * (y - c.y) + (x - c.x) * (x - c.x);
    return dc + ds * spatial;
  };

  LabelMap assign(h, w, -1);
  std::vector<double> best(n);
  for (int iter = 0; iter < std::max(1, options.max_iters); ++iter) {
    std::fill(best.begin(), best.end(), std::numeric_limits<double>::infinity());
    for (std::size_t k = 0; k < centers.size(); ++k) {
      const Center& c = centers[k];
      const int y0 = std::max(0, static_cast<int>(std::ceil(c.y - step)));
      const int y1 = std::min(h - 1, static_cast<int>(std::floor(c.y + step)));
      const int x0 = std::max(0, static_cast<int>(std::ceil(c.x - step)));
      const int x1 = std::min(w - 1, static_cast<int>(std::floor(c.x + step)));
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          const std::size_t p = static_cast<std::size_t>(y) * w + x;
          const double d = dist2(c, p, y, x);
          if (d < best[p]) {
            best[p] = d;
            assign.data[p] = static_cast<int>(k);
          }
        }
      }
    }
    // Pixels outside every search window take the globally nearest centre.
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t p = static_cast<std::size_t>(y) * w + x;
        if (std::isfinite(best[p])) continue;
        for (std::size_t k = 0; k < centers.size(); ++k) {
          const double d = dist2(centers[k], p, y, x);
          if (d < best[p]) {
            best[p] = d;
            assign.data[p] = static_cast<int>(k);
          }
        }
      }
    }
    std::vector<std::array<double, 6>> acc(centers.size(), {0, 0, 0, 0, 0, 0});
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t p = static_cast<std::size_t>(y) * w + x;
        auto& a = acc[assign.data[p]];
        a[0] += lab[p][0];
        a[1] += lab[p][1];
        a[2] += lab[p][2];
        a[3] += y;
        a[4] += x;
        a[5] += 1;
      }
    }
    for (std::size_t k = 0; k < centers.size(); ++k) {
      const auto& a = acc[k];
      if (a[5] == 0) continue;
      centers[k] = {a[0] / a[5], a[1] / a[5], a[2] / a[5], a[3] / a[5], a[4] / a[5]};
    }
  }
  return enforce_connectivity(assign);
}

int label_count(const LabelMap& labels) {
  if (labels.data.empty()) return 0;
  return *std::max_element(labels.data.begin(), labels.data.end()) + 1;
}

std::vector<PatchRecord> extract_patches(const std::string& image_id,
                                         const Image& img,
                                         const LabelMap& labels,
                                         const FeatureAnnotations& annotations) {
  if (!labels.same_size(img.height, img.width)) {
    throw std::invalid_argument("label map and image sizes differ");
  }
  const int count = label_count(labels);
  struct Box {
    int y0 = std::numeric_limits<int>::max();
    int x0 = std::numeric_limits<int>::max();
    int y1 = -1;
    int x1 = -1;
  };
  std::vector<Box> boxes(count);
  for (int y = 0; y < labels.height; ++y) {
    for (int x = 0; x < labels.width; ++x) {
      const int l = labels.at(y, x);
      if (l < 0) throw std::invalid_argument("negative superpixel label");
      Box& b = boxes[l];
      b.y0 = std::min(b.y0, y);
      b.x0 = std::min(b.x0, x);
      b.y1 = std::max(b.y1, y);
      b.x1 = std::max(b.x1, x);
    }
  }
  for (const auto& [label, cls] : annotations) {
    if (label < 0 || label >= count || boxes[label].y1 < 0) {
      throw std::invalid_argument("annotated superpixel " + std::to_string(label) +
                                  " is absent from the label map");
    }
  }
  std::vector<PatchRecord> out;
  for (int l = 0; l < count; ++l) {
    const Box& b = boxes[l];
    if (b.y1 < 0) continue;
    Image crop(b.y1 - b.y0 + 1, b.x1 - b.x0 + 1);
    for (int c = 0; c < Image::kChannels; ++c) {
      for (int y = b.y0; y <= b.y1; ++y) {
        for (int x = b.x0; x <= b.x1; ++x) crop.at(c, y - b.y0, x - b.x0) = img.at(c, y, x);
      }
    }
    PatchRecord rec;
    rec.source_id = image_id;
    rec.superpixel = l;
    rec.pixels = resize_bilinear(crop, kPatchSide, kPatchSide);
    auto it = annotations.find(l);
    rec.feature = it == annotations.end() ? FeatureClass::B : it->second;
    out.push_back(std::move(rec));
  }
  return out;
}

std::map<std::string, FeatureAnnotations> read_annotations(
    const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  std::map<std::string, FeatureAnnotations> out;
  if (t.header.empty()) return out;
  const auto id = t.column("image_id");
  const auto sp = t.column("superpixel_label");
  const auto cls = t.column("feature_class");
  for (const auto& row : t.rows) {
    int label = 0;
    try {
      label = std::stoi(row[sp]);
    } catch (const std::exception&) {
      throw FormatError("annotations: bad superpixel label '" + row[sp] + "'");
    }
    out[row[id]][label] = parse_feature_class(row[cls]);
  }
  return out;
}

}  // namespace dermkit
