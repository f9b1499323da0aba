#include "dermkit/licu.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dermkit/csv.hpp"
#include "dermkit/error.hpp"
#include "dermkit/morphology.hpp"

namespace dermkit {

namespace {

void check_same_size(const ClassMaps& maps, int h, int w) {
  for (const auto& m : maps) {
    if (!m.same_size(h, w)) throw std::invalid_argument("class map sizes differ");
  }
}

}  // namespace

LesionClass LesionIndex::predicted() const {
  return static_cast<LesionClass>(std::max_element(values.begin(), values.end()) -
                                  values.begin());
}

ClassMaps normalize_possibilities(const ClassMaps& maps) {
  const int h = maps[0].height;
  const int w = maps[0].width;
  check_same_size(maps, h, w);
  ClassMaps out{Grid<double>(h, w), Grid<double>(h, w), Grid<double>(h, w)};
  for (std::size_t i = 0; i < maps[0].size(); ++i) {
    const double lo = std::min({maps[0].data[i], maps[1].data[i], maps[2].data[i]});
    double total = 0.0;
    for (int k = 0; k < kLesionClasses; ++k) total += maps[k].data[i] - lo;
    for (int k = 0; k < kLesionClasses; ++k) {
      out[k].data[i] = total > 0.0 ? (maps[k].data[i] - lo) / total : 1.0 / 3.0;
    }
  }
  return out;
}

ClassMaps refine(const ClassMaps& p, const DistanceMap& d) {
  check_same_size(p, d.height, d.width);
  ClassMaps out = p;
  for (auto& m : out) {
    for (std::size_t i = 0; i < m.size(); ++i) m.data[i] *= d.data[i];
  }
  return out;
}

LesionIndex lesion_index(const ClassMaps& refined, const BinaryMask& mask) {
  check_same_size(refined, mask.height, mask.width);
  std::array<long double, kLesionClasses> sum{};
  std::size_t count = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask.data[i]) continue;
    ++count;
    for (int k = 0; k < kLesionClasses; ++k) sum[k] += refined[k].data[i];
  }
  if (count == 0) throw NoLesionFound();
  // The mean's 1/count cancels in the normalization.
  const long double total = sum[0] + sum[1] + sum[2];
  LesionIndex idx;
  if (!(total > 0.0L)) {
    idx.values.fill(1.0 / 3.0);
    return idx;
  }
  // Indexes are snapped to a 2^-32 grid: rescaling the distance map only
  // perturbs the ratios by a few ulps, which the grid absorbs, so the
  // result is reproducible bit for bit.
  constexpr long double grid = 4294967296.0L;
  for (int k = 0; k < kLesionClasses; ++k) {
    idx.values[k] = static_cast<double>(std::nearbyint(sum[k] / total * grid) / grid);
  }
  return idx;
}

Classification classify_lesion(const CoarseMaps& maps, bool use_licu) {
  Classification c;
  c.mask = segment(maps);
  if (std::none_of(c.mask.data.begin(), c.mask.data.end(), [](auto v) { return v != 0; })) {
    c.mask = BinaryMask(maps.height(), maps.width(), 1);
    c.whole_image = true;
  }
  const ClassMaps p = normalize_possibilities(maps.lesion_maps());
  DistanceMap d = DistanceMap(maps.height(), maps.width(), 1.0);
  if (use_licu) {
    DistanceMap border = distance_map(c.mask);
    // A mask that is all border (e.g. one pixel wide) has no interior
    // weight at all; it keeps the uniform weights.
    if (std::any_of(border.data.begin(), border.data.end(), [](double v) { return v > 0; })) {
      d = std::move(border);
    }
  }
  c.index = lesion_index(refine(p, d), c.mask);
  return c;
}

std::string classification_csv(const std::vector<std::string>& image_ids,
                               const std::vector<LesionIndex>& indexes) {
  if (image_ids.size() != indexes.size()) {
    throw std::invalid_argument("id and index counts differ");
  }
  CsvTable t;
  t.header = {"image_id", "melanoma_index", "sk_index", "nevus_index"};
  for (std::size_t i = 0; i < indexes.size(); ++i) {
    t.rows.push_back({image_ids[i], format_number(indexes[i].values[0]),
                      format_number(indexes[i].values[1]),
                      format_number(indexes[i].values[2])});
  }
  return format_csv(t);
}

}  // namespace dermkit
