#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dermkit/augment.hpp"
#include "dermkit/image.hpp"
#include "dermkit/network.hpp"
#include "dermkit/training.hpp"

namespace dermkit {

enum class LesionClass { melanoma = 0, seborrheic_keratosis = 1, nevus = 2 };
inline constexpr int kLesionClasses = 3;
// Per-pixel classes: background, then the lesion classes shifted by one.
inline constexpr int kPixelClasses = kLesionClasses + 1;

std::string_view to_string(LesionClass c);
LesionClass parse_lesion_class(std::string_view s);

struct MiniFcrnSpec {
  int stem_width = 16;
  std::array<int, 3> level_widths{32, 64, 64};
  int blocks_per_level = 2;
  bool batch_norm = true;
};

// Smallest accepted input side (three stride-2 levels).
inline constexpr int kMinLinInput = 8;

// Fully convolutional: stem conv3x3 at full resolution, then three levels
// of [stride-2 conv3x3, residual blocks], a bilinear upsample back to the
// input size and a 1x1 conv to kPixelClasses logits. Residual block:
// conv3x3-BN-relu-conv3x3-BN, identity add, relu.
NetworkSpec build_mini_fcrn(const MiniFcrnSpec& spec = {});

struct LesionSample {
  Image image;
  BinaryMask mask;
  LesionClass label = LesionClass::nevus;
};

// Resolves a manifest source_path to the untransformed sample.
using SampleLoader = std::function<LesionSample(const std::string& source_path)>;

// Pixel labels: 0 outside the mask, 1 + class inside.
std::vector<int> pixel_labels(const BinaryMask& mask, LesionClass label);

// Applies the record's rotate/flip chain and crops to a train_side square.
LesionSample materialize(const ManifestRecord& record, const SampleLoader& load,
                         int train_side);

struct LinTrainConfig {
  TrainConfig train = default_train();
  std::uint64_t init_seed = 0;
  int train_side = 320;
  double val_fraction = 0.2;

  static TrainConfig default_train();
};

// Source paths held out for validation: round(n * val_fraction) of the
// distinct sources, drawn with `seed`. Every augmented copy of a source
// lands on the same side of the split.
std::vector<std::string> validation_sources(const DatasetManifest& manifest,
                                            double val_fraction, std::uint64_t seed);

struct LinPair {
  TrainResult dr;
  TrainResult dm;
};

using PairProgressFn = std::function<void(std::string_view network, const EpochLog&)>;

// Trains one network on DR and an independent one on DM.
LinPair train_lin_pair(const NetworkSpec& net, const DatasetManifest& dr,
                       const DatasetManifest& dm, const SampleLoader& load,
                       const LinTrainConfig& config,
                       const PairProgressFn& progress = {});

// Summed per-pixel class probabilities at the original image resolution,
// 1 x kPixelClasses x H x W.
struct CoarseMaps {
  Tensor scores;
  int runs = 0;  // networks x scales summed into `scores`

  int height() const { return scores.shape().h; }
  int width() const { return scores.shape().w; }
  Grid<double> channel(int k) const;
  // The melanoma, seborrheic keratosis and nevus channels.
  std::array<Grid<double>, kLesionClasses> lesion_maps() const;
};

// For every (parameter set, long-side scale): proportional resize, eval
// forward, softmax over classes, bilinear resize back, sum.
CoarseMaps infer_multiscale(const NetworkSpec& net, std::span<const Parameters> nets,
                            const Image& img, std::span<const int> scales);

// Lesion where the arg-max class is not background (ties favour
// background), reduced to the largest component with holes filled.
BinaryMask segment(const CoarseMaps& maps);

}  // namespace dermkit
