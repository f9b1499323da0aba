#include "dermkit/lin.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <stdexcept>

#include "dermkit/engine.hpp"
#include "dermkit/morphology.hpp"
#include "dermkit/transform.hpp"

namespace dermkit {

std::string_view to_string(LesionClass c) {
  switch (c) {
    case LesionClass::melanoma: return "melanoma";
    case LesionClass::seborrheic_keratosis: return "seborrheic_keratosis";
    case LesionClass::nevus: return "nevus";
  }
  return "?";
}

LesionClass parse_lesion_class(std::string_view s) {
  for (int k = 0; k < kLesionClasses; ++k) {
    if (to_string(static_cast<LesionClass>(k)) == s) return static_cast<LesionClass>(k);
  }
  throw std::invalid_argument("unknown lesion class '" + std::string(s) + "'");
}

NetworkSpec build_mini_fcrn(const MiniFcrnSpec& spec) {
  if (spec.stem_width < 1 || spec.blocks_per_level < 0 ||
      std::any_of(spec.level_widths.begin(), spec.level_widths.end(),
                  [](int w) { return w < 1; })) {
    throw std::invalid_argument("mini-FCRN widths must be >= 1");
  }
  NetworkSpec net;
  net.in_channels = 3;
  net.output = OutputKind::per_pixel;
  auto& L = net.layers;
  auto conv_bn_relu = [&](int width, int stride) {
    L.push_back(LayerSpec::conv(width, 3, stride));
    if (spec.batch_norm) L.push_back(LayerSpec::batch_norm());
    L.push_back(LayerSpec::relu());
  };
  conv_bn_relu(spec.stem_width, 1);
  for (int width : spec.level_widths) {
    conv_bn_relu(width, 2);
    for (int b = 0; b < spec.blocks_per_level; ++b) {
      const int block_input = static_cast<int>(L.size()) - 1;
      conv_bn_relu(width, 1);
      L.push_back(LayerSpec::conv(width, 3));
      if (spec.batch_norm) L.push_back(LayerSpec::batch_norm());
      L.push_back(LayerSpec::residual_add(block_input));
      L.push_back(LayerSpec::relu());
    }
  }
  L.push_back(LayerSpec::upsample_to_input());
  L.push_back(LayerSpec::conv(kPixelClasses, 1));
  return net;
}

std::vector<int> pixel_labels(const BinaryMask& mask, LesionClass label) {
  std::vector<int> out(mask.size());
  const int inside = 1 + static_cast<int>(label);
  for (std::size_t i = 0; i < mask.size(); ++i) out[i] = mask.data[i] ? inside : 0;
  return out;
}

LesionSample materialize(const ManifestRecord& record, const SampleLoader& load,
                         int train_side) {
  LesionSample s = load(record.source_path);
  if (!s.mask.same_size(s.image.height, s.image.width)) {
    throw std::invalid_argument(record.source_path + ": mask and image sizes differ");
  }
  s.image = center_crop_resize(apply_transform(s.image, record.angle_deg, record.flip),
                               train_side);
  s.mask = center_crop_resize(apply_transform(s.mask, record.angle_deg, record.flip),
                              train_side);
  return s;
}

TrainConfig LinTrainConfig::default_train() {
  TrainConfig t;
  t.epochs = 6;
  t.batch_size = 128;
  t.weights = ClassWeights::uniform(kPixelClasses);
  return t;
}

std::vector<std::string> validation_sources(const DatasetManifest& manifest,
                                            double val_fraction, std::uint64_t seed) {
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) {
    throw std::invalid_argument("validation fraction must lie in [0, 1)");
  }
  std::set<std::string> distinct;
  for (const auto& r : manifest.records) distinct.insert(r.source_path);
  std::vector<std::string> sources(distinct.begin(), distinct.end());
  std::mt19937_64 rng(seed);
  std::shuffle(sources.begin(), sources.end(), rng);
  sources.resize(static_cast<std::size_t>(
      std::lround(static_cast<double>(sources.size()) * val_fraction)));
  std::sort(sources.begin(), sources.end());
  return sources;
}

namespace {

BatchFn record_batches(std::vector<ManifestRecord> records, const SampleLoader& load,
                       int side) {
  return [records = std::move(records), &load, side](std::span<const std::size_t> ids) {
    std::vector<Image> images;
    images.reserve(ids.size());
    Batch b;
    for (std::size_t i : ids) {
      LesionSample s = materialize(records[i], load, side);
      const auto labels = pixel_labels(s.mask, s.label);
      b.labels.insert(b.labels.end(), labels.begin(), labels.end());
      images.push_back(std::move(s.image));
    }
    b.input = to_tensor(images);
    return b;
  };
}

TrainResult train_one(const NetworkSpec& net, const DatasetManifest& data,
                      const std::set<std::string>& held_out, const SampleLoader& load,
                      const LinTrainConfig& config, const ProgressFn& progress) {
  Parameters init = init_parameters(net, config.init_seed);
  if (config.train.epochs == 0) return TrainResult{std::move(init), {}, -1};
  std::vector<ManifestRecord> train;
  std::vector<ManifestRecord> val;
  for (const auto& r : data.records) {
    (held_out.contains(r.source_path) ? val : train).push_back(r);
  }
  if (train.empty()) throw std::invalid_argument("empty training split");
  const std::size_t n_train = train.size();
  const std::size_t n_val = val.size();
  return train_network(net, std::move(init), n_train,
                       record_batches(std::move(train), load, config.train_side), n_val,
                       record_batches(std::move(val), load, config.train_side),
                       config.train, progress);
}

}  // namespace

LinPair train_lin_pair(const NetworkSpec& net, const DatasetManifest& dr,
                       const DatasetManifest& dm, const SampleLoader& load,
                       const LinTrainConfig& config, const PairProgressFn& progress) {
  if (dr.records.empty() || dm.records.empty()) {
    throw std::invalid_argument("DR and DM must be non-empty");
  }
  if (config.train_side < kMinLinInput) {
    throw std::invalid_argument("train_side below the minimum network input");
  }
  const auto held = validation_sources(dr, config.val_fraction, config.train.seed);
  const std::set<std::string> held_out(held.begin(), held.end());
  auto tagged = [&](std::string_view name) -> ProgressFn {
    if (!progress) return {};
    return [&progress, name](const EpochLog& e) { progress(name, e); };
  };
  LinPair pair;
  pair.dr = train_one(net, dr, held_out, load, config, tagged("dr"));
  pair.dm = train_one(net, dm, held_out, load, config, tagged("dm"));
  return pair;
}

Grid<double> CoarseMaps::channel(int k) const { return dermkit::channel(scores, 0, k); }

std::array<Grid<double>, kLesionClasses> CoarseMaps::lesion_maps() const {
  return {channel(1), channel(2), channel(3)};
}

CoarseMaps infer_multiscale(const NetworkSpec& net, std::span<const Parameters> nets,
                            const Image& img, std::span<const int> scales) {
  if (nets.empty() || scales.empty()) {
    throw std::invalid_argument("need at least one network and one scale");
  }
  if (std::min(img.height, img.width) < kMinLinInput) {
    throw std::invalid_argument("image smaller than the minimum network input");
  }
  const int h = img.height;
  const int w = img.width;
  CoarseMaps maps;
  maps.scores = Tensor(Shape{1, kPixelClasses, h, w}, 0.0);
  for (const Parameters& params : nets) {
    for (int scale : scales) {
      const auto [sh, sw] = proportional_size(h, w, scale);
      if (std::min(sh, sw) < kMinLinInput) {
        throw std::invalid_argument("scale " + std::to_string(scale) +
                                    " shrinks the image below the minimum network input");
      }
      const Image resized = resize_bilinear(img, sh, sw);
      const Tensor probs = softmax_channels(predict(net, params, to_tensor(resized)));
      for (int k = 0; k < kPixelClasses; ++k) {
        const Grid<double> back = resize_bilinear(dermkit::channel(probs, 0, k), h, w);
        for (int y = 0; y < h; ++y) {
          for (int x = 0; x < w; ++x) maps.scores.at(0, k, y, x) += back.at(y, x);
        }
      }
      ++maps.runs;
    }
  }
  return maps;
}

BinaryMask segment(const CoarseMaps& maps) {
  const int h = maps.height();
  const int w = maps.width();
  BinaryMask mask(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int best = 0;
      for (int k = 1; k < kPixelClasses; ++k) {
        if (maps.scores.at(0, k, y, x) > maps.scores.at(0, best, y, x)) best = k;
      }
      mask.at(y, x) = best != 0;
    }
  }
  return largest_component(mask);
}

}  // namespace dermkit
