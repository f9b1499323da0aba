#include "dermkit/lfn.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <random>
#include <stdexcept>

#include "dermkit/csv.hpp"
#include "dermkit/engine.hpp"

namespace dermkit {

std::string_view to_string(LfnVariant v) {
  switch (v) {
    case LfnVariant::standard: return "standard";
    case LfnVariant::narrow: return "narrow";
    case LfnVariant::wide: return "wide";
  }
  return "?";
}

LfnVariant parse_lfn_variant(std::string_view s) {
  for (auto v : {LfnVariant::standard, LfnVariant::narrow, LfnVariant::wide}) {
    if (to_string(v) == s) return v;
  }
  throw std::invalid_argument("unknown LFN variant '" + std::string(s) + "'");
}

std::array<int, 4> stage_widths(LfnVariant v) {
  switch (v) {
    case LfnVariant::standard: return {16, 32, 64, 128};
    case LfnVariant::narrow: return {16, 16, 16, 32};
    case LfnVariant::wide: return {32, 64, 64, 128};
  }
  throw std::invalid_argument("bad LFN variant");
}

NetworkSpec build_lfn(LfnVariant variant, const LfnOptions& options) {
  NetworkSpec net;
  net.in_channels = 3;
  net.in_height = options.input_side;
  net.in_width = options.input_side;
  net.output = OutputKind::per_image;
  const auto widths = stage_widths(variant);
  for (int stage = 0; stage < 4; ++stage) {
    for (int kernel : {3, 1, 3}) {
      net.layers.push_back(LayerSpec::conv(widths[stage], kernel));
      if (options.batch_norm) net.layers.push_back(LayerSpec::batch_norm());
      net.layers.push_back(LayerSpec::relu());
    }
    net.layers.push_back(stage < 3 ? LayerSpec::max_pool(2, 2)
                                   : LayerSpec::global_avg_pool());
  }
  net.layers.push_back(LayerSpec::dense(kFeatureClasses));
  return net;
}

ClassWeights lfn_class_weights() { return ClassWeights({1, 1, 5, 3, 8}); }

TrainConfig LfnTrainConfig::default_train() {
  TrainConfig t;
  t.epochs = 10;
  t.batch_size = 128;
  t.weights = lfn_class_weights();
  return t;
}

PatchSource in_memory_source(std::vector<Image> patches,
                             std::vector<FeatureClass> labels) {
  if (patches.size() != labels.size()) {
    throw std::invalid_argument("patch and label counts differ");
  }
  auto store = std::make_shared<const std::vector<Image>>(std::move(patches));
  PatchSource src;
  src.labels = std::move(labels);
  src.load = [store](std::size_t i) { return (*store)[i]; };
  return src;
}

Split stratified_split(const std::vector<FeatureClass>& labels, double val_fraction,
                       std::uint64_t seed) {
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) {
    throw std::invalid_argument("validation fraction must lie in [0, 1)");
  }
  std::array<std::vector<std::size_t>, kFeatureClasses> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    by_class[static_cast<int>(labels[i])].push_back(i);
  }
  Split split;
  for (int k = 0; k < kFeatureClasses; ++k) {
    auto& members = by_class[k];
    std::seed_seq sseq{seed, static_cast<std::uint64_t>(k)};
    std::mt19937_64 rng(sseq);
    std::shuffle(members.begin(), members.end(), rng);
    const auto n_val = static_cast<std::size_t>(
        std::lround(static_cast<double>(members.size()) * val_fraction));
    split.val.insert(split.val.end(), members.begin(), members.begin() + n_val);
    split.train.insert(split.train.end(), members.begin() + n_val, members.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.val.begin(), split.val.end());
  return split;
}

namespace {

BatchFn patch_batches(const PatchSource& src, std::vector<std::size_t> index, int side) {
  return [&src, index = std::move(index), side](std::span<const std::size_t> ids) {
    std::vector<Image> images;
    images.reserve(ids.size());
    Batch b;
    for (std::size_t i : ids) {
      images.push_back(src.load(index[i]));
      if (images.back().height != side || images.back().width != side) {
        throw std::invalid_argument("patches must be " + std::to_string(side) + "x" +
                                    std::to_string(side));
      }
      b.labels.push_back(static_cast<int>(src.labels[index[i]]));
    }
    b.input = to_tensor(images);
    return b;
  };
}

void require_all_classes(const PatchSource& src, const std::vector<std::size_t>& index) {
  std::array<bool, kFeatureClasses> seen{};
  for (std::size_t i : index) seen[static_cast<int>(src.labels[i])] = true;
  for (int k = 0; k < kFeatureClasses; ++k) {
    if (!seen[k]) {
      throw std::invalid_argument(
          "feature class " + std::string(to_string(static_cast<FeatureClass>(k))) +
          " is missing from the training split");
    }
  }
}

TrainResult train_indexed(const NetworkSpec& net, const PatchSource& train,
                          std::vector<std::size_t> train_idx, const PatchSource& val,
                          std::vector<std::size_t> val_idx,
                          const LfnTrainConfig& config, const ProgressFn& progress) {
  Parameters init = init_parameters(net, config.init_seed);
  if (config.train.epochs == 0) return TrainResult{std::move(init), {}, -1};
  if (train_idx.empty()) throw std::invalid_argument("empty patch manifest");
  require_all_classes(train, train_idx);
  const std::size_t n_train = train_idx.size();
  const std::size_t n_val = val_idx.size();
  return train_network(net, std::move(init), n_train,
                       patch_batches(train, std::move(train_idx), net.in_height), n_val,
                       patch_batches(val, std::move(val_idx), net.in_height), config.train, progress);
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

}  // namespace

TrainResult train_lfn(const NetworkSpec& net, const PatchSource& train,
                      const PatchSource& val, const LfnTrainConfig& config,
                      const ProgressFn& progress) {
  return train_indexed(net, train, all_indices(train.size()), val,
                       all_indices(val.size()), config, progress);
}

TrainResult train_lfn(const NetworkSpec& net, const PatchSource& all,
                      const LfnTrainConfig& config, const ProgressFn& progress) {
  Split split = stratified_split(all.labels, config.val_fraction, config.train.seed);
  return train_indexed(net, all, std::move(split.train), all, std::move(split.val),
                       config, progress);
}

std::vector<FeatureProbabilities> classify_patches(const NetworkSpec& net,
                                                   const Parameters& params,
                                                   const std::vector<Image>& patches,
                                                   int batch_size) {
  if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  std::vector<FeatureProbabilities> out;
  out.reserve(patches.size());
  for (std::size_t start = 0; start < patches.size(); start += batch_size) {
    const std::size_t end = std::min(patches.size(), start + batch_size);
    for (std::size_t i = start; i < end; ++i) {
      if (patches[i].height != net.in_height || patches[i].width != net.in_width) {
        throw std::invalid_argument("patch " + std::to_string(i) + " is " +
                                    std::to_string(patches[i].height) + "x" +
                                    std::to_string(patches[i].width) + ", expected " +
                                    std::to_string(net.in_height) + "x" +
                                    std::to_string(net.in_width));
      }
    }
    const Tensor probs = softmax_channels(predict(
        net, params,
        to_tensor(std::span<const Image>(patches.data() + start, end - start))));
    for (int n = 0; n < probs.shape().n; ++n) {
      FeatureProbabilities p{};
      for (int k = 0; k < kFeatureClasses; ++k) p[k] = probs.at(n, k, 0, 0);
      out.push_back(p);
    }
  }
  return out;
}

std::vector<FeatureCall> emit_feature_map(
    const LabelMap& labels, const std::map<int, FeatureProbabilities>& probabilities,
    double threshold) {
  const int count = label_count(labels);
  std::vector<bool> present(count, false);
  for (auto v : labels.data) present[v] = true;
  std::vector<FeatureCall> out;
  for (int l = 0; l < count; ++l) {
    if (!present[l]) continue;
    auto it = probabilities.find(l);
    if (it == probabilities.end()) {
      throw std::invalid_argument("no probabilities for superpixel " + std::to_string(l));
    }
    FeatureCall call;
    call.superpixel = l;
    call.probabilities = it->second;
    for (int k = 0; k < kFeatureClasses; ++k) call.called[k] = it->second[k] >= threshold;
    out.push_back(call);
  }
  return out;
}

std::string feature_csv(const std::string& image_id,
                        const std::vector<FeatureCall>& calls, bool with_header) {
  CsvTable t;
  t.header = {"image_id", "superpixel_label", "PN", "NN", "MC", "S"};
  for (const auto& c : calls) {
    std::vector<std::string> row{image_id, std::to_string(c.superpixel)};
    for (int k = 1; k < kFeatureClasses; ++k) row.push_back(format_number(c.probabilities[k]));
    t.rows.push_back(std::move(row));
  }
  std::string text = format_csv(t);
  if (!with_header) text.erase(0, text.find('\n') + 1);
  return text;
}

}  // namespace dermkit
