#pragma once

#include <string_view>
#include <utility>

#include "dermkit/image.hpp"

namespace dermkit {

enum class FlipAxis { none, x, y };

std::string_view to_string(FlipAxis axis);
FlipAxis parse_flip_axis(std::string_view s);

// Bilinear resampling with half-pixel centers. Resizing to the same size is
// the identity.
Image resize_bilinear(const Image& img, int height, int width);
Grid<double> resize_bilinear(const Grid<double>& g, int height, int width);
BinaryMask resize_mask(const BinaryMask& mask, int height, int width);

// Largest centered square, then bilinear resize to side x side.
Image center_crop_resize(const Image& img, int side);
BinaryMask center_crop_resize(const BinaryMask& mask, int side);

// Size after scaling so the longer side equals `long_side`; the shorter side
// is rounded to the nearest pixel (at least 1).
std::pair<int, int> proportional_size(int height, int width, int long_side);
Image resize_proportional(const Image& img, int long_side);

// Counter-clockwise rotation (as displayed, y pointing down) about the image
// center; same output size, bilinear sampling, reflection padding.
// Multiples of 180 degrees, and of 90 degrees on square images, are exact
// pixel permutations.
Image rotate(const Image& img, double angle_deg);
Grid<double> rotate(const Grid<double>& g, double angle_deg);
BinaryMask rotate(const BinaryMask& mask, double angle_deg);

// x mirrors columns (left-right), y mirrors rows (top-bottom).
Image flip(const Image& img, FlipAxis axis);
BinaryMask flip(const BinaryMask& mask, FlipAxis axis);

// Rotation followed by a flip, the transform chain stored in manifests.
Image apply_transform(const Image& img, double angle_deg, FlipAxis axis);
BinaryMask apply_transform(const BinaryMask& mask, double angle_deg,
                           FlipAxis axis);

}  // namespace dermkit
