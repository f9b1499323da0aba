#include <memory>

#include "commands.hpp"
#include "dermkit/checkpoint.hpp"
#include "dermkit/image_io.hpp"
#include "dermkit/lfn.hpp"
#include "dermkit/licu.hpp"
#include "dermkit/superpixel.hpp"

namespace dermkit::cli {

namespace {

struct LinModels {
  NetworkSpec net;
  std::vector<Parameters> params;
};

// All checkpoints must share one architecture.
std::optional<LinModels> load_lin_models(const std::vector<fs::path>& paths, Validator& v) {
  v.require(!paths.empty(), "--models is required");
  LinModels m;
  bool ok = !paths.empty();
  for (const auto& p : paths) {
    if (!v.existing_file(p, "--models")) {
      ok = false;
      continue;
    }
    try {
      Checkpoint c = load_checkpoint(p);
      if (m.params.empty()) {
        m.net = c.net;
      } else if (!(c.net == m.net)) {
        v.fail("--models: '" + p.string() + "' has a different architecture");
        ok = false;
      }
      m.params.push_back(std::move(c.params));
    } catch (const std::exception& e) {
      v.fail("--models: " + p.string() + ": " + e.what());
      ok = false;
    }
  }
  if (!ok) return std::nullopt;
  return m;
}

struct LinOpts {
  fs::path images, out;
  std::vector<fs::path> models;
  std::vector<int> scales{300, 500};
  bool no_licu = false;
};

void add_lin_options(CLI::App* cmd, LinOpts& o) {
  cmd->add_option("--images", o.images, "Image directory");
  cmd->add_option("--models", o.models, "LIN checkpoints (DR, DM)")->delimiter(',');
  cmd->add_option("--scales", o.scales, "Long-side inference scales")
      ->delimiter(',')
      ->capture_default_str();
  cmd->add_option("--out", o.out, "Output directory");
}

// Shared validation of the segment and classify commands.
std::optional<LinModels> check_lin(const LinOpts& o, Validator& v,
                                   std::map<std::string, fs::path>& images) {
  if (v.existing_dir(o.images, "--images")) {
    images = list_images(o.images);
    v.require(!images.empty(), "--images: no .png/.jpg images");
  }
  v.given(o.out, "--out");
  v.require(!o.scales.empty(), "--scales needs at least one scale");
  for (int s : o.scales) {
    v.require(s >= kMinLinInput, "--scales: " + std::to_string(s) + " is below " +
                                     std::to_string(kMinLinInput));
  }
  return load_lin_models(o.models, v);
}

void add_segment(CLI::App* infer, const Globals& g) {
  auto o = std::make_shared<LinOpts>();
  auto* cmd = infer->add_subcommand("segment", "Lesion masks from the fused LIN maps");
  add_lin_options(cmd, *o);
  cmd->callback([o, &g] {
    const std::string stage = "infer.segment";
    Validator v(stage);
    std::map<std::string, fs::path> images;
    const auto models = check_lin(*o, v, images);
    v.check();

    OutputSet out(resolve_output(o->out, g.output_root), stage);
    for (const auto& [id, path] : images) {
      const CoarseMaps maps = infer_multiscale(models->net, models->params, read_image(path),
                                               o->scales);
      out.write_mask("masks/" + id + "_segmentation.png", segment(maps));
      progress(g, stage, id);
    }
    out.finish();
  });
}

void add_classify(CLI::App* infer, const Globals& g) {
  auto o = std::make_shared<LinOpts>();
  auto* cmd = infer->add_subcommand("classify", "Lesion indexes for every image");
  add_lin_options(cmd, *o);
  cmd->add_flag("--no-licu", o->no_licu, "Average the maps uniformly over the mask");
  cmd->callback([o, &g] {
    const std::string stage = "infer.classify";
    Validator v(stage);
    std::map<std::string, fs::path> images;
    const auto models = check_lin(*o, v, images);
    v.check();

    std::vector<std::string> ids;
    std::vector<LesionIndex> indexes;
    for (const auto& [id, path] : images) {
      const CoarseMaps maps = infer_multiscale(models->net, models->params, read_image(path),
                                               o->scales);
      const Classification c = classify_lesion(maps, !o->no_licu);
      ids.push_back(id);
      indexes.push_back(c.index);
      progress(g, stage,
               id + ": " + std::string(to_string(c.index.predicted())) +
                   (c.whole_image ? " (no lesion found; whole image used)" : ""));
    }
    OutputSet out(resolve_output(o->out, g.output_root), stage);
    out.write("classification.csv", classification_csv(ids, indexes));
    out.finish();
  });
}

void add_features(CLI::App* infer, const Globals& g) {
  struct Opts {
    fs::path images, model, superpixels, out;
    SlicOptions slic;
    double threshold = 0.5;
  };
  auto o = std::make_shared<Opts>();
  auto* cmd = infer->add_subcommand("features", "Per-superpixel dermoscopic feature calls");
  cmd->add_option("--images", o->images, "Image directory");
  cmd->add_option("--model", o->model, "LFN checkpoint");
  cmd->add_option("--superpixels", o->superpixels,
                  "Directory of <id>_superpixels.png label maps (default: run SLIC)");
  cmd->add_option("--k", o->slic.superpixels, "SLIC superpixel count")->capture_default_str();
  cmd->add_option("--compactness", o->slic.compactness, "SLIC compactness m")
      ->capture_default_str();
  cmd->add_option("--threshold", o->threshold, "Probability at which a feature is called")
      ->capture_default_str();
  cmd->add_option("--out", o->out, "Output directory");
  cmd->callback([o, &g] {
    const std::string stage = "infer.features";
    Validator v(stage);
    std::map<std::string, fs::path> images;
    if (v.existing_dir(o->images, "--images")) {
      images = list_images(o->images);
      v.require(!images.empty(), "--images: no .png/.jpg images");
    }
    std::optional<Checkpoint> model;
    if (v.existing_file(o->model, "--model")) {
      try {
        model = load_checkpoint(o->model);
      } catch (const std::exception& e) {
        v.fail("--model: " + std::string(e.what()));
      }
    }
    if (!o->superpixels.empty() && v.existing_dir(o->superpixels, "--superpixels")) {
      for (const auto& [id, path] : images) {
        v.require(fs::is_regular_file(o->superpixels / (id + "_superpixels.png")),
                  "--superpixels: no label map for '" + id + "'");
      }
    }
    v.require(o->slic.superpixels > 0, "--k must be positive");
    v.require(o->slic.compactness > 0, "--compactness must be positive");
    v.require(o->threshold >= 0 && o->threshold <= 1, "--threshold must lie in [0, 1]");
    v.given(o->out, "--out");
    v.check();

    std::string csv;
    for (const auto& [id, path] : images) {
      const Image img = read_image(path);
      const LabelMap labels = o->superpixels.empty()
                                  ? slic(img, o->slic)
                                  : read_label_png(o->superpixels / (id + "_superpixels.png"));
      if (!labels.same_size(img.height, img.width)) {
        throw StageError(stage, id + ": superpixel map and image sizes differ");
      }
      const auto patches = extract_patches(id, img, labels, {});
      std::vector<Image> pixels;
      for (const auto& p : patches) pixels.push_back(p.pixels);
      const auto probs = classify_patches(model->net, model->params, pixels);
      std::map<int, FeatureProbabilities> by_label;
      for (std::size_t i = 0; i < patches.size(); ++i) by_label[patches[i].superpixel] = probs[i];
      csv += feature_csv(id, emit_feature_map(labels, by_label, o->threshold), csv.empty());
      progress(g, stage, id + ": " + std::to_string(patches.size()) + " superpixels");
    }
    OutputSet out(resolve_output(o->out, g.output_root), stage);
    out.write("features.csv", csv);
    out.finish();
  });
}

}  // namespace

void add_infer(CLI::App& app, const Globals& g) {
  auto* infer = app.add_subcommand("infer", "Run trained networks");
  infer->require_subcommand(1);
  add_segment(infer, g);
  add_classify(infer, g);
  add_features(infer, g);
}

}  // namespace dermkit::cli
