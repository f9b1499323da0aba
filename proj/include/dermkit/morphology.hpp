#pragma once

#include <vector>

#include "dermkit/image.hpp"

namespace dermkit {

struct Pixel {
  int y = 0;
  int x = 0;
  friend auto operator<=>(const Pixel&, const Pixel&) = default;
};

// Lesion pixels with at least one background 4-neighbour; pixels outside the
// image count as background. Row-major order.
std::vector<Pixel> extract_border(const BinaryMask& mask);

// Exact Euclidean distance from each lesion pixel to the nearest border
// pixel (border pixels and background are 0). Computed with a separable
// squared-distance transform over the border set.
DistanceMap distance_map(const BinaryMask& mask);

// Keeps the largest 8-connected lesion component (ties: the one reached
// first in row-major order) and fills its holes.
BinaryMask largest_component(const BinaryMask& mask);

// Fills background regions not 4-connected to the image boundary.
BinaryMask fill_holes(const BinaryMask& mask);

// Scales a distance map to [0, 1] by its maximum (for display only).
Grid<double> normalized_for_display(const DistanceMap& d);

}  // namespace dermkit
