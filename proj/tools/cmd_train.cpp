#include <cstdio>
#include <memory>
#include <set>

#include "commands.hpp"
#include "dermkit/augment.hpp"
#include "dermkit/checkpoint.hpp"
#include "dermkit/image_io.hpp"
#include "dermkit/lfn.hpp"
#include "dermkit/transform.hpp"

namespace dermkit::cli {

namespace {

struct SgdOpts {
  int epochs = 0;
  int batch = 0;
  double lr = 0.01;
  double momentum = 0.9;
  double gamma = 0.1;
  int decay_every = 0;
  double weight_decay = 0.0;
  double val_fraction = 0.2;
  std::optional<std::uint64_t> seed;
};

void add_sgd_options(CLI::App* cmd, SgdOpts& o) {
  cmd->add_option("--epochs", o.epochs, "Training epochs")->capture_default_str();
  cmd->add_option("--batch", o.batch, "Mini-batch size")->capture_default_str();
  cmd->add_option("--lr", o.lr, "Initial learning rate")->capture_default_str();
  cmd->add_option("--momentum", o.momentum, "SGD momentum")->capture_default_str();
  cmd->add_option("--gamma", o.gamma, "Step-decay factor")->capture_default_str();
  cmd->add_option("--decay-every", o.decay_every, "Epochs per decay (0: half the run)")
      ->capture_default_str();
  cmd->add_option("--weight-decay", o.weight_decay, "L2 coefficient")->capture_default_str();
  cmd->add_option("--val-fraction", o.val_fraction, "Held-out fraction")->capture_default_str();
  cmd->add_option("--seed", o.seed, "Pipeline seed (required)");
}

void check_sgd(const SgdOpts& o, Validator& v) {
  v.require(o.seed.has_value(), "--seed is required for training");
  v.require(o.epochs >= 1, "--epochs must be at least 1");
  v.require(o.batch >= 1, "--batch must be at least 1");
  v.require(o.lr > 0, "--lr must be positive");
  v.require(o.momentum >= 0 && o.momentum < 1, "--momentum must lie in [0, 1)");
  v.require(o.gamma > 0 && o.gamma <= 1, "--gamma must lie in (0, 1]");
  v.require(o.decay_every >= 0, "--decay-every must be non-negative");
  v.require(o.weight_decay >= 0, "--weight-decay must be non-negative");
  v.require(o.val_fraction >= 0 && o.val_fraction < 1, "--val-fraction must lie in [0, 1)");
}

TrainConfig to_train_config(TrainConfig t, const SgdOpts& o, std::string_view stage) {
  t.sgd.learning_rate = o.lr;
  t.sgd.momentum = o.momentum;
  t.sgd.gamma = o.gamma;
  t.sgd.decay_every = o.decay_every;
  t.sgd.weight_decay = o.weight_decay;
  t.epochs = o.epochs;
  t.batch_size = o.batch;
  t.seed = substream(*o.seed, std::string(stage) + ".shuffle");
  return t;
}

std::string epoch_line(const EpochLog& e) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "epoch %d: lr %.4g, train loss %.4f, val loss %.4f, val acc %.4f",
                e.epoch, e.learning_rate, e.train_loss, e.val_loss, e.val_accuracy);
  return buf;
}

std::optional<DatasetManifest> load_manifest(const fs::path& p, Validator& v,
                                             std::string_view option) {
  if (!v.existing_file(p, option)) return std::nullopt;
  try {
    return read_manifest(p);
  } catch (const std::exception& e) {
    v.fail(std::string(option) + ": " + e.what());
    return std::nullopt;
  }
}

// Patch manifest sources are relative to the manifest's directory.
PatchSource patch_source(const DatasetManifest& m, const fs::path& manifest_path) {
  const fs::path base = manifest_path.parent_path();
  PatchSource src;
  std::vector<ManifestRecord> records = m.records;
  for (const auto& r : records) src.labels.push_back(parse_feature_class(r.label));
  src.load = [records = std::move(records), base](std::size_t i) {
    const ManifestRecord& r = records[i];
    Image img = apply_transform(read_image(base / r.source_path), r.angle_deg, r.flip);
    if (img.height != kPatchSide || img.width != kPatchSide) {
      throw std::runtime_error(r.source_path + ": patches must be 56x56");
    }
    return img;
  };
  return src;
}

void check_patches(const DatasetManifest& m, const fs::path& manifest_path, Validator& v,
                   std::string_view option) {
  const fs::path base = manifest_path.parent_path();
  std::set<FeatureClass> present;
  for (const auto& r : m.records) {
    try {
      present.insert(parse_feature_class(r.label));
    } catch (const std::exception&) {
      v.fail(std::string(option) + ": record '" + r.id + "' has unknown feature class '" +
             r.label + "'");
    }
    v.require(fs::is_regular_file(base / r.source_path),
              std::string(option) + ": missing patch file '" + r.source_path + "'");
  }
  v.require(m.size() > 0, std::string(option) + ": manifest is empty");
  if (m.size() > 0) {
    for (int k = 0; k < kFeatureClasses; ++k) {
      const auto c = static_cast<FeatureClass>(k);
      v.require(present.contains(c), std::string(option) + ": no '" +
                                         std::string(to_string(c)) + "' patches");
    }
  }
}

void add_train_lfn(CLI::App* train, const Globals& g) {
  struct Opts {
    fs::path patches, val_patches, out;
    std::string variant = "standard";
    bool no_bn = false;
    std::vector<double> weights{1, 1, 5, 3, 8};
    SgdOpts sgd{.epochs = 10, .batch = 128, .seed = {}};
  };
  auto o = std::make_shared<Opts>();
  auto* cmd = train->add_subcommand("lfn", "Train the lesion feature network on patches");
  cmd->add_option("--patches", o->patches, "Training patch manifest CSV");
  cmd->add_option("--val-patches", o->val_patches,
                  "Validation patch manifest (default: stratified split of --patches)");
  cmd->add_option("--variant", o->variant, "standard, narrow or wide")->capture_default_str();
  cmd->add_flag("--no-batch-norm", o->no_bn, "Drop the batch-norm layers");
  cmd->add_option("--weights", o->weights, "Loss weights for B,PN,NN,MC,S")
      ->delimiter(',')
      ->capture_default_str();
  add_sgd_options(cmd, o->sgd);
  cmd->add_option("--out", o->out, "Output directory");
  cmd->callback([o, &g] {
    const std::string stage = "train.lfn";
    Validator v(stage);
    const auto train = load_manifest(o->patches, v, "--patches");
    if (train) check_patches(*train, o->patches, v, "--patches");
    std::optional<DatasetManifest> val;
    if (!o->val_patches.empty()) {
      val = load_manifest(o->val_patches, v, "--val-patches");
      if (val) check_patches(*val, o->val_patches, v, "--val-patches");
    }
    v.given(o->out, "--out");
    std::optional<LfnVariant> variant;
    try {
      variant = parse_lfn_variant(o->variant);
    } catch (const std::exception&) {
      v.fail("--variant must be standard, narrow or wide");
    }
    v.require(o->weights.size() == kFeatureClasses, "--weights needs five values");
    for (double w : o->weights) v.require(w > 0, "--weights must be positive");
    check_sgd(o->sgd, v);
    v.check();

    const NetworkSpec net = build_lfn(*variant, {.batch_norm = !o->no_bn});
    LfnTrainConfig config;
    config.train = to_train_config(LfnTrainConfig::default_train(), o->sgd, stage);
    config.train.weights = ClassWeights(o->weights);
    config.init_seed = substream(*o->sgd.seed, stage + ".init");
    config.val_fraction = o->sgd.val_fraction;
    const auto report = [&](const EpochLog& e) { progress(g, stage, epoch_line(e)); };
    const PatchSource train_src = patch_source(*train, o->patches);
    const TrainResult result =
        val ? train_lfn(net, train_src, patch_source(*val, o->val_patches), config, report)
            : train_lfn(net, train_src, config, report);

    OutputSet out(resolve_output(o->out, g.output_root), stage);
    out.write("lfn.ckpt", encode_checkpoint(net, result.params));
    out.write("lfn_log.jsonl", log_to_json_lines(result.log));
    out.finish();
    progress(g, stage, "best epoch " + std::to_string(result.best_epoch));
  });
}

void add_train_lin(CLI::App* train, const Globals& g) {
  struct Opts {
    fs::path dr, dm, images, masks, out;
    int train_side = 320;
    bool no_bn = false;
    SgdOpts sgd{.epochs = 6, .batch = 128, .seed = {}};
  };
  auto o = std::make_shared<Opts>();
  auto* cmd = train->add_subcommand("lin", "Train the DR and DM segmentation networks");
  cmd->add_option("--dr", o->dr, "DR manifest CSV");
  cmd->add_option("--dm", o->dm, "DM manifest CSV");
  cmd->add_option("--images", o->images, "Directory of the source images");
  cmd->add_option("--masks", o->masks, "Directory of the lesion masks");
  cmd->add_option("--train-side", o->train_side, "Training crop side")->capture_default_str();
  cmd->add_flag("--no-batch-norm", o->no_bn, "Drop the batch-norm layers");
  add_sgd_options(cmd, o->sgd);
  cmd->add_option("--out", o->out, "Output directory");
  cmd->callback([o, &g] {
    const std::string stage = "train.lin";
    Validator v(stage);
    const auto dr = load_manifest(o->dr, v, "--dr");
    const auto dm = load_manifest(o->dm, v, "--dm");
    const bool have_images = v.existing_dir(o->images, "--images");
    const bool have_masks = v.existing_dir(o->masks, "--masks");
    v.given(o->out, "--out");
    v.require(o->train_side >= kMinLinInput,
              "--train-side must be at least " + std::to_string(kMinLinInput));
    check_sgd(o->sgd, v);
    const auto images = list_images(o->images);
    std::map<std::string, LesionClass> labels;
    for (const auto* m : {dr ? &*dr : nullptr, dm ? &*dm : nullptr}) {
      if (!m) continue;
      for (const auto& r : m->records) {
        if (labels.contains(r.source_path)) continue;
        try {
          labels[r.source_path] = parse_lesion_class(r.label);
        } catch (const std::exception&) {
          v.fail("record '" + r.id + "' has unknown lesion class '" + r.label + "'");
          continue;
        }
        if (have_images) {
          v.require(images.contains(r.source_path),
                    "--images: no image for source '" + r.source_path + "'");
        }
        if (have_masks) {
          v.require(!find_mask(o->masks, r.source_path).empty(),
                    "--masks: no mask for source '" + r.source_path + "'");
        }
      }
    }
    if (dr && dm) {
      v.require(dr->size() > 0, "--dr: manifest is empty");
      v.require(dr->size() == dm->size(), "--dr and --dm differ in size");
    }
    v.check();

    const NetworkSpec net = build_mini_fcrn({.batch_norm = !o->no_bn});
    LinTrainConfig config;
    config.train = to_train_config(LinTrainConfig::default_train(), o->sgd, stage);
    config.init_seed = substream(*o->sgd.seed, stage + ".init");
    config.train_side = o->train_side;
    config.val_fraction = o->sgd.val_fraction;
    const fs::path masks = o->masks;
    const SampleLoader load = [&](const std::string& source) {
      LesionSample s;
      s.image = read_image(images.at(source));
      s.mask = read_mask(find_mask(masks, source));
      s.label = labels.at(source);
      return s;
    };
    const LinPair pair =
        train_lin_pair(net, *dr, *dm, load, config, [&](std::string_view name, const EpochLog& e) {
          progress(g, stage, std::string(name) + " " + epoch_line(e));
        });

    OutputSet out(resolve_output(o->out, g.output_root), stage);
    out.write("dr.ckpt", encode_checkpoint(net, pair.dr.params));
    out.write("dm.ckpt", encode_checkpoint(net, pair.dm.params));
    out.write("dr_log.jsonl", log_to_json_lines(pair.dr.log));
    out.write("dm_log.jsonl", log_to_json_lines(pair.dm.log));
    out.finish();
  });
}

}  // namespace

void add_train(CLI::App& app, const Globals& g) {
  auto* train = app.add_subcommand("train", "Train a network");
  train->require_subcommand(1);
  add_train_lfn(train, g);
  add_train_lin(train, g);
}

}  // namespace dermkit::cli
