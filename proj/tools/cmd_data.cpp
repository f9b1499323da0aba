#include <iostream>
#include <memory>

#include "commands.hpp"
#include "dermkit/augment.hpp"
#include "dermkit/csv.hpp"
#include "dermkit/image_io.hpp"
#include "dermkit/superpixel.hpp"
#include "dermkit/transform.hpp"

namespace dermkit::cli {

namespace {

bool flag_set(const std::string& text, const std::string& where) {
  std::size_t used = 0;
  const double v = std::stod(text, &used);
  if (used != text.size()) throw std::invalid_argument(where + ": not a number");
  return v >= 0.5;
}

// Feature-class labels of a patch manifest, checked record by record.
void check_patch_labels(const DatasetManifest& m, Validator& v, std::string_view option) {
  for (const auto& r : m.records) {
    try {
      parse_feature_class(r.label);
    } catch (const std::exception&) {
      v.fail(std::string(option) + ": record '" + r.id + "' has unknown feature class '" +
             r.label + "'");
    }
  }
}

}  // namespace

GroundTruth read_ground_truth(const fs::path& path) {
  const CsvTable t = read_csv(path);
  const std::size_t id = t.column("image_id");
  const std::size_t mel = t.column("melanoma");
  const std::size_t sk = t.column("seborrheic_keratosis");
  GroundTruth gt;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    const std::string where = path.string() + " row " + std::to_string(i + 2);
    const bool m = flag_set(row.at(mel), where);
    const bool s = flag_set(row.at(sk), where);
    if (m && s) throw std::invalid_argument(where + ": both melanoma and seborrheic_keratosis set");
    gt.ids.push_back(row.at(id));
    gt.labels.push_back(m ? LesionClass::melanoma
                          : s ? LesionClass::seborrheic_keratosis : LesionClass::nevus);
  }
  return gt;
}

std::optional<GroundTruth> load_ground_truth(const fs::path& path, Validator& v,
                                             std::string_view option) {
  if (!v.existing_file(path, option)) return std::nullopt;
  try {
    return read_ground_truth(path);
  } catch (const std::exception& e) {
    v.fail(std::string(option) + ": " + e.what());
    return std::nullopt;
  }
}

void progress(const Globals& g, std::string_view stage, const std::string& line) {
  if (!g.quiet) std::cerr << "[" << stage << "] " << line << "\n";
}

void add_preprocess(CLI::App& app, const Globals& g) {
  struct Opts {
    fs::path images, masks, out;
    int side = 320;
  };
  auto o = std::make_shared<Opts>();
  auto* cmd = app.add_subcommand("preprocess", "Center-crop and resize images and masks");
  cmd->add_option("--images", o->images, "Input image directory");
  cmd->add_option("--masks", o->masks, "Optional lesion mask directory");
  cmd->add_option("--side", o->side, "Output side length")->capture_default_str();
  cmd->add_option("--out", o->out, "Output directory");
  cmd->callback([o, &g] {
    const std::string stage = "preprocess";
    Validator v(stage);
    v.existing_dir(o->images, "--images");
    v.given(o->out, "--out");
    v.require(o->side >= kMinLinInput, "--side must be at least " + std::to_string(kMinLinInput));
    const auto images = list_images(o->images);
    if (fs::is_directory(o->images)) {
      v.require(!images.empty(), "--images: no .png/.jpg images in '" + o->images.string() + "'");
    }
    if (!o->masks.empty() && v.existing_dir(o->masks, "--masks")) {
      for (const auto& [id, path] : images) {
        v.require(!find_mask(o->masks, id).empty(), "--masks: no mask for image '" + id + "'");
      }
    }
    v.check();

    OutputSet out(resolve_output(o->out, g.output_root), stage);
    for (const auto& [id, path] : images) {
      out.write_png("images/" + id + ".png", center_crop_resize(read_image(path), o->side));
      if (!o->masks.empty()) {
        out.write_mask("masks/" + id + "_segmentation.png",
                       center_crop_resize(read_mask(find_mask(o->masks, id)), o->side));
      }
    }
    out.finish();
    progress(g, stage, std::to_string(images.size()) + " images");
  });
}

void add_augment(CLI::App& app, const Globals& g) {
  auto* cmd = app.add_subcommand("augment", "Build augmented dataset manifests");
  cmd->require_subcommand(1);

  struct LesionOpts {
    fs::path ground_truth, images, out;
    int step_melanoma = 18, step_sk = 18, step_nevus = 45;
    std::optional<std::uint64_t> seed;
  };
  auto lo = std::make_shared<LesionOpts>();
  auto* lesions = cmd->add_subcommand("lesions", "DR and DM manifests from ISIC ground truth");
  lesions->add_option("--ground-truth", lo->ground_truth, "ISIC ground-truth CSV");
  lesions->add_option("--images", lo->images, "Image directory");
  lesions->add_option("--step-melanoma", lo->step_melanoma, "Rotation step (degrees)")
      ->capture_default_str();
  lesions->add_option("--step-sk", lo->step_sk, "Rotation step (degrees)")->capture_default_str();
  lesions->add_option("--step-nevus", lo->step_nevus, "Rotation step (degrees)")
      ->capture_default_str();
  lesions->add_option("--seed", lo->seed, "Pipeline seed");
  lesions->add_option("--out", lo->out, "Output directory");
  lesions->callback([lo, &g] {
    const std::string stage = "augment.lesions";
    Validator v(stage);
    const auto gt = load_ground_truth(lo->ground_truth, v, "--ground-truth");
    v.existing_dir(lo->images, "--images");
    v.given(lo->out, "--out");
    v.require(lo->seed.has_value(), "--seed is required");
    for (auto [name, step] : {std::pair{"--step-melanoma", lo->step_melanoma},
                              std::pair{"--step-sk", lo->step_sk},
                              std::pair{"--step-nevus", lo->step_nevus}}) {
      v.require(step > 0 && 360 % step == 0, std::string(name) + " must divide 360");
    }
    const auto images = list_images(lo->images);
    if (gt) {
      for (const auto& id : gt->ids) {
        v.require(images.contains(id), "--images: no image for '" + id + "'");
      }
    }
    v.check();

    DatasetManifest sources;
    for (std::size_t i = 0; i < gt->ids.size(); ++i) {
      // Lesion sources are image ids, resolved against --images at training.
      sources.records.push_back(
          {gt->ids[i], gt->ids[i], std::string(to_string(gt->labels[i])), 0.0, FlipAxis::none});
    }
    AugmentPlan plan;
    plan.rotation_step = {{"melanoma", lo->step_melanoma},
                          {"seborrheic_keratosis", lo->step_sk},
                          {"nevus", lo->step_nevus}};
    const DatasetManifest dr = build_dr(sources, plan);
    const DatasetManifest dm = build_dm(dr, substream(*lo->seed, "augment.dm"));
    OutputSet out(resolve_output(lo->out, g.output_root), stage);
    out.write("sources.csv", manifest_to_csv(sources));
    out.write("dr.csv", manifest_to_csv(dr));
    out.write("dm.csv", manifest_to_csv(dm));
    out.finish();
    progress(g, stage, std::to_string(sources.size()) + " sources -> " +
                           std::to_string(dr.size()) + " DR / " + std::to_string(dm.size()) +
                           " DM records");
  });

  struct PatchOpts {
    fs::path patches, out;
    std::vector<std::string> targets{"B=87089", "PN=77325"};
    std::vector<std::string> rotate{"NN", "MC", "S"};
    std::optional<std::uint64_t> seed;
  };
  auto po = std::make_shared<PatchOpts>();
  auto* patches = cmd->add_subcommand("patches", "Class-balanced patch manifest");
  patches->add_option("--patches", po->patches, "Patch manifest CSV");
  patches->add_option("--target", po->targets, "CLASS=COUNT down-sampling targets")
      ->delimiter(',')
      ->capture_default_str();
  patches->add_option("--rotate", po->rotate, "Classes expanded by 90/180/270 rotation")
      ->delimiter(',')
      ->capture_default_str();
  patches->add_option("--seed", po->seed, "Pipeline seed");
  patches->add_option("--out", po->out, "Output directory");
  patches->callback([po, &g] {
    const std::string stage = "augment.patches";
    Validator v(stage);
    std::optional<DatasetManifest> src;
    if (v.existing_file(po->patches, "--patches")) {
      try {
        src = read_manifest(po->patches);
        check_patch_labels(*src, v, "--patches");
      } catch (const std::exception& e) {
        v.fail(std::string("--patches: ") + e.what());
      }
    }
    v.given(po->out, "--out");
    v.require(po->seed.has_value(), "--seed is required");
    AugmentPlan plan;
    for (const auto& t : po->targets) {
      const auto eq = t.find('=');
      try {
        if (eq == std::string::npos) throw std::invalid_argument("missing '='");
        const std::string cls = t.substr(0, eq);
        parse_feature_class(cls);
        const std::size_t n = std::stoul(t.substr(eq + 1));
        plan.sample_targets[cls] = n;
        if (src) {
          v.require(n <= src->count(cls), "--target " + t + ": only " +
                                              std::to_string(src->count(cls)) + " available");
        }
      } catch (const std::exception&) {
        v.fail("--target '" + t + "' is not CLASS=COUNT with a feature class");
      }
    }
    for (const auto& c : po->rotate) {
      try {
        parse_feature_class(c);
        plan.rotate_classes.insert(c);
      } catch (const std::exception&) {
        v.fail("--rotate: unknown feature class '" + c + "'");
      }
    }
    v.check();

    const fs::path out_dir = resolve_output(po->out, g.output_root);
    DatasetManifest balanced = balance_patches(*src, plan, substream(*po->seed, "augment.patches"));
    // Re-anchor relative source paths from the input manifest to the output.
    const fs::path in_dir = fs::absolute(po->patches).parent_path();
    for (auto& r : balanced.records) {
      const fs::path p(r.source_path);
      if (p.is_relative()) {
        r.source_path =
            (in_dir / p).lexically_normal().lexically_proximate(fs::absolute(out_dir)).generic_string();
      }
    }
    OutputSet out(out_dir, stage);
    out.write("balanced.csv", manifest_to_csv(balanced));
    out.finish();
    progress(g, stage, std::to_string(src->size()) + " -> " + std::to_string(balanced.size()) +
                           " patches");
  });
}

void add_superpixel(CLI::App& app, const Globals& g) {
  struct Opts {
    fs::path images, annotations, out;
    SlicOptions slic;
  };
  auto o = std::make_shared<Opts>();
  auto* cmd = app.add_subcommand("superpixel", "SLIC label maps and annotated patches");
  cmd->add_option("--images", o->images, "Image directory");
  cmd->add_option("--k", o->slic.superpixels, "Target superpixel count")->capture_default_str();
  cmd->add_option("--compactness", o->slic.compactness, "SLIC compactness m")
      ->capture_default_str();
  cmd->add_option("--iters", o->slic.max_iters, "SLIC iterations")->capture_default_str();
  cmd->add_option("--annotations", o->annotations,
                  "Feature annotations CSV; when given, 56x56 patches are extracted");
  cmd->add_option("--out", o->out, "Output directory");
  cmd->callback([o, &g] {
    const std::string stage = "superpixel";
    Validator v(stage);
    v.existing_dir(o->images, "--images");
    v.given(o->out, "--out");
    v.require(o->slic.superpixels > 0, "--k must be positive");
    v.require(o->slic.compactness > 0, "--compactness must be positive");
    v.require(o->slic.max_iters >= 0, "--iters must be non-negative");
    const auto images = list_images(o->images);
    std::map<std::string, FeatureAnnotations> annotations;
    if (!o->annotations.empty() && v.existing_file(o->annotations, "--annotations")) {
      try {
        annotations = read_annotations(o->annotations);
      } catch (const std::exception& e) {
        v.fail(std::string("--annotations: ") + e.what());
      }
      for (const auto& [id, a] : annotations) {
        v.require(images.contains(id), "--annotations: no image for '" + id + "'");
      }
    }
    v.check();

    OutputSet out(resolve_output(o->out, g.output_root), stage);
    DatasetManifest patches;
    for (const auto& [id, path] : images) {
      const Image img = read_image(path);
      const LabelMap labels = slic(img, o->slic);
      out.write("superpixels/" + id + "_superpixels.png", encode_label_png(labels));
      progress(g, stage, id + ": " + std::to_string(label_count(labels)) + " superpixels");
      // Only annotated images contribute patches.
      const auto it = annotations.find(id);
      if (it == annotations.end()) continue;
      for (const auto& p : extract_patches(id, img, labels, it->second)) {
        const std::string name = id + "_" + std::to_string(p.superpixel);
        out.write_png("patches/" + name + ".png", p.pixels);
        patches.records.push_back({name, "patches/" + name + ".png",
                                   std::string(to_string(p.feature)), 0.0, FlipAxis::none});
      }
    }
    if (!o->annotations.empty()) out.write("patches.csv", manifest_to_csv(patches));
    out.finish();
  });
}

}  // namespace dermkit::cli
