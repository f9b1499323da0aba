#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "dermkit/image.hpp"

namespace dermkit {

// Dermoscopic feature classes in weight-vector order.
enum class FeatureClass { B = 0, PN = 1, NN = 2, MC = 3, S = 4 };
inline constexpr int kFeatureClasses = 5;

std::string_view to_string(FeatureClass c);
FeatureClass parse_feature_class(std::string_view s);

inline constexpr int kPatchSide = 56;

struct PatchRecord {
  std::string source_id;
  int superpixel = 0;
  Image pixels;  // kPatchSide x kPatchSide
  FeatureClass feature = FeatureClass::B;
};

struct SlicOptions {
  int superpixels = 1000;   // target count k
  double compactness = 10;  // m
  int max_iters = 10;
};

// sRGB in [0,1] to CIELAB (D65).
std::array<double, 3> srgb_to_lab(double r, double g, double b);

// SLIC superpixels: grid-seeded centres at spacing S = sqrt(h*w/k), moved to
// the lowest-gradient pixel of their 3x3 neighbourhood, then iterative
// assignment within 2S x 2S windows using
//   D = sqrt(dc^2 + (ds / S)^2 * m^2)
// in CIELAB + (y, x). Fragments that are not the main piece of their
// cluster are merged into the neighbour they share the most edges with, so
// every label is one 4-connected region. Labels are 0..L-1 in row-major
// order of first appearance.
LabelMap slic(const Image& img, const SlicOptions& options = {});

int label_count(const LabelMap& labels);

// Per-superpixel feature annotations; unlisted superpixels are background.
using FeatureAnnotations = std::map<int, FeatureClass>;

// One 56x56 patch per superpixel: the bounding box of the superpixel
// (surrounding pixels inside the box included) resized bilinearly.
std::vector<PatchRecord> extract_patches(const std::string& image_id,
                                         const Image& img,
                                         const LabelMap& labels,
                                         const FeatureAnnotations& annotations);

// CSV: image_id,superpixel_label,feature_class
std::map<std::string, FeatureAnnotations> read_annotations(
    const std::filesystem::path& path);

}  // namespace dermkit
