#pragma once

#include <array>
#include <string>
#include <vector>

#include "dermkit/image.hpp"
#include "dermkit/lin.hpp"

namespace dermkit {

// Melanoma, seborrheic keratosis and nevus maps of equal size.
using ClassMaps = std::array<Grid<double>, kLesionClasses>;

struct LesionIndex {
  std::array<double, kLesionClasses> values{};  // non-negative, sum 1

  LesionClass predicted() const;  // arg-max, first on ties
};

// Per pixel: p_i = (v_i - min_j v_j) / sum_k (v_k - min_j v_j). Pixels whose
// three values are equal get (1/3, 1/3, 1/3).
ClassMaps normalize_possibilities(const ClassMaps& maps);

// Every channel multiplied by the distance map.
ClassMaps refine(const ClassMaps& p, const DistanceMap& d);

// Channel means over the mask, normalized to sum 1 (uniform if all are 0).
// Throws NoLesionFound on an empty mask.
LesionIndex lesion_index(const ClassMaps& refined, const BinaryMask& mask);

struct Classification {
  BinaryMask mask;  // the segment() mask, or all ones when it was empty
  LesionIndex index;
  bool whole_image = false;
};

// Segments the coarse maps and computes the lesion index over the mask,
// weighting pixels by their distance to the lesion border when `use_licu`
// is set (uniformly when the mask has no interior pixel) and uniformly
// otherwise.
Classification classify_lesion(const CoarseMaps& maps, bool use_licu = true);

// CSV: image_id,melanoma_index,sk_index,nevus_index
std::string classification_csv(const std::vector<std::string>& image_ids,
                                const std::vector<LesionIndex>& indexes);

}  // namespace dermkit
