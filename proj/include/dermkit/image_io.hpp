#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dermkit/image.hpp"

namespace dermkit {

// PNG (8-bit gray/RGB/RGBA) or JPEG, chosen by file signature.
Image read_image(const std::filesystem::path& path);
Image decode_image(const std::string& bytes);

// 8-bit RGB PNG; values are rounded from [0, 1] to [0, 255].
void write_png(const std::filesystem::path& path, const Image& img);
std::string encode_png(const Image& img);

// Single-channel masks: any value >= 128 is lesion. Written as 0/255.
BinaryMask read_mask(const std::filesystem::path& path);
void write_mask_png(const std::filesystem::path& path, const BinaryMask& mask);
std::string encode_mask_png(const BinaryMask& mask);

// Superpixel label maps as RGB PNG with label = R + 256 * G.
LabelMap read_label_png(const std::filesystem::path& path);
void write_label_png(const std::filesystem::path& path, const LabelMap& labels);
std::string encode_label_png(const LabelMap& labels);

// False-colour (jet) rendering of a distance map scaled by its maximum.
Image distance_heatmap(const DistanceMap& d);

// The image with the mask border drawn in `rgb`.
Image overlay_outline(const Image& img, const BinaryMask& mask,
                      const double (&rgb)[3] = {0.0, 0.2, 1.0});

// Raw grid file: "DKGRID1\0", u32 height, u32 width, then height*width
// little-endian IEEE-754 binary32 values, row-major.
void write_raw_grid(const std::filesystem::path& path, const Grid<double>& g);
Grid<double> read_raw_grid(const std::filesystem::path& path);

}  // namespace dermkit
