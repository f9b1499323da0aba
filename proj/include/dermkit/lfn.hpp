#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "dermkit/image.hpp"
#include "dermkit/network.hpp"
#include "dermkit/superpixel.hpp"
#include "dermkit/training.hpp"

namespace dermkit {

enum class LfnVariant { standard, narrow, wide };

std::string_view to_string(LfnVariant v);
LfnVariant parse_lfn_variant(std::string_view s);

// Output channels of the four stages.
std::array<int, 4> stage_widths(LfnVariant v);

struct LfnOptions {
  bool batch_norm = true;
  int input_side = kPatchSide;
};

// Four stages of conv3x3 -> conv1x1 -> conv3x3 (each followed by batch norm
// and relu), max pooling after stages 1-3, global average pooling after
// stage 4 and one dense layer to the five feature-class logits.
NetworkSpec build_lfn(LfnVariant variant, const LfnOptions& options = {});

// (B, PN, NN, MC, S) = (1, 1, 5, 3, 8)
ClassWeights lfn_class_weights();

// Patches addressed by index; `load` is called on demand so large sets need
// not stay resident.
struct PatchSource {
  std::vector<FeatureClass> labels;
  std::function<Image(std::size_t)> load;

  std::size_t size() const { return labels.size(); }
};

PatchSource in_memory_source(std::vector<Image> patches,
                             std::vector<FeatureClass> labels);

struct LfnTrainConfig {
  TrainConfig train = default_train();
  std::uint64_t init_seed = 0;
  double val_fraction = 0.2;  // used when no explicit validation set is given

  static TrainConfig default_train();
};

// Per-class split: the first round(n_k * val_fraction) indices of a seeded
// permutation of class k go to validation.
struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
};
Split stratified_split(const std::vector<FeatureClass>& labels, double val_fraction,
                       std::uint64_t seed);

// Throws std::invalid_argument if a feature class is absent from `train`.
TrainResult train_lfn(const NetworkSpec& net, const PatchSource& train,
                      const PatchSource& val, const LfnTrainConfig& config,
                      const ProgressFn& progress = {});
TrainResult train_lfn(const NetworkSpec& net, const PatchSource& all,
                      const LfnTrainConfig& config,
                      const ProgressFn& progress = {});

using FeatureProbabilities = std::array<double, kFeatureClasses>;

// Eval-mode softmax probabilities per patch.
std::vector<FeatureProbabilities> classify_patches(
    const NetworkSpec& net, const Parameters& params,
    const std::vector<Image>& patches, int batch_size = 128);

struct FeatureCall {
  int superpixel = 0;
  FeatureProbabilities probabilities{};
  std::array<bool, kFeatureClasses> called{};  // probability >= threshold
};

// One entry per superpixel of `labels`, in label order. `probabilities` maps
// superpixel label -> class probabilities and must cover every label.
std::vector<FeatureCall> emit_feature_map(
    const LabelMap& labels, const std::map<int, FeatureProbabilities>& probabilities,
    double threshold = 0.5);

// CSV: image_id,superpixel_label,PN,NN,MC,S
std::string feature_csv(const std::string& image_id,
                        const std::vector<FeatureCall>& calls,
                        bool with_header = true);

}  // namespace dermkit
