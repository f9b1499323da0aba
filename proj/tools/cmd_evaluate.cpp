#include <memory>

#include "commands.hpp"
#include "dermkit/csv.hpp"
#include "dermkit/image_io.hpp"
#include "dermkit/metrics.hpp"
#include "dermkit/morphology.hpp"
#include "dermkit/superpixel.hpp"
#include "dermkit/transform.hpp"

namespace dermkit::cli {

namespace {

// Mask ids of a directory: file stems with any "_segmentation" suffix removed.
std::vector<std::string> mask_ids(const fs::path& dir) {
  std::vector<std::string> ids;
  const std::string suffix = "_segmentation";
  for (const auto& [stem, path] : list_images(dir)) {
    if (path.extension() != ".png") continue;
    std::string id = stem;
    if (id.size() > suffix.size() && id.ends_with(suffix)) id.resize(id.size() - suffix.size());
    ids.push_back(id);
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

std::optional<CsvTable> load_csv(const fs::path& p, Validator& v, std::string_view option,
                                 std::initializer_list<std::string_view> columns) {
  if (!v.existing_file(p, option)) return std::nullopt;
  try {
    CsvTable t = read_csv(p);
    bool ok = true;
    for (auto c : columns) {
      ok &= v.require(std::find(t.header.begin(), t.header.end(), c) != t.header.end(),
                      std::string(option) + ": missing column '" + std::string(c) + "'");
    }
    if (!ok) return std::nullopt;
    return t;
  } catch (const std::exception& e) {
    v.fail(std::string(option) + ": " + e.what());
    return std::nullopt;
  }
}

double number(const std::string& s, const std::string& where, Validator& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(s, &used);
    if (used == s.size()) return x;
  } catch (const std::exception&) {
  }
  v.fail(where + ": '" + s + "' is not a number");
  return 0.0;
}

void require_both_classes(const std::vector<int>& labels, const std::string& name,
                          Validator& v) {
  const auto pos = std::count(labels.begin(), labels.end(), 1);
  v.require(pos > 0, name + ": no positive items");
  v.require(pos < static_cast<long>(labels.size()), name + ": no negative items");
}

BinaryTaskScore score(const std::string& name, const std::vector<double>& s,
                      const std::vector<int>& l) {
  return {name, roc_auc(s, l).auc, average_precision(s, l)};
}

void add_task1(CLI::App* eval, const Globals& g) {
  struct Opts {
    fs::path pred, truth, out;
  };
  auto o = std::make_shared<Opts>();
  auto* cmd = eval->add_subcommand("task1", "Lesion segmentation scores (JSON)");
  cmd->add_option("--pred", o->pred, "Predicted mask directory");
  cmd->add_option("--truth", o->truth, "Ground-truth mask directory");
  cmd->add_option("--out", o->out, "Output directory");
  cmd->callback([o, &g] {
    const std::string stage = "evaluate.task1";
    Validator v(stage);
    const bool have_pred = v.existing_dir(o->pred, "--pred");
    std::vector<std::pair<BinaryMask, BinaryMask>> pairs;
    std::vector<std::string> ids;
    if (v.existing_dir(o->truth, "--truth")) {
      ids = mask_ids(o->truth);
      v.require(!ids.empty(), "--truth: no masks");
    }
    for (const auto& id : ids) {
      if (!have_pred) break;
      const fs::path p = find_mask(o->pred, id);
      if (!v.require(!p.empty(), "--pred: no mask for '" + id + "'")) continue;
      try {
        BinaryMask pred = read_mask(p);
        BinaryMask truth = read_mask(find_mask(o->truth, id));
        if (v.require(pred.same_size(truth.height, truth.width),
                      "'" + id + "': predicted and true masks differ in size")) {
          pairs.emplace_back(std::move(pred), std::move(truth));
        }
      } catch (const std::exception& e) {
        v.fail("'" + id + "': " + e.what());
      }
    }
    v.given(o->out, "--out");
    v.check();

    std::vector<ImageSegScore> scores;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      scores.push_back({ids[i], seg_metrics(confusion(pairs[i].first, pairs[i].second))});
    }
    OutputSet out(resolve_output(o->out, g.output_root), stage);
    out.write("task1.json", segmentation_report(scores));
    out.finish();
  });
}

void add_task2(CLI::App* eval, const Globals& g) {
  struct Opts {
    fs::path features, annotations, out;
  };
  auto o = std::make_shared<Opts>();
  auto* cmd = eval->add_subcommand("task2", "Dermoscopic feature scores (JSON)");
  cmd->add_option("--features", o->features, "features.csv from infer features");
  cmd->add_option("--annotations", o->annotations, "Superpixel annotations CSV");
  cmd->add_option("--out", o->out, "Output directory");
  cmd->callback([o, &g] {
    const std::string stage = "evaluate.task2";
    Validator v(stage);
    const auto table = load_csv(o->features, v, "--features",
                                {"image_id", "superpixel_label", "PN", "NN", "MC", "S"});
    std::map<std::string, FeatureAnnotations> truth;
    if (v.existing_file(o->annotations, "--annotations")) {
      try {
        truth = read_annotations(o->annotations);
      } catch (const std::exception& e) {
        v.fail("--annotations: " + std::string(e.what()));
      }
    }
    v.given(o->out, "--out");
    constexpr int kScored = kFeatureClasses - 1;  // B is not scored
    std::array<std::vector<double>, kScored> scores;
    std::array<std::vector<int>, kScored> labels;
    if (table) {
      const std::size_t id_col = table->column("image_id");
      const std::size_t sp_col = table->column("superpixel_label");
      for (std::size_t r = 0; r < table->rows.size(); ++r) {
        const auto& row = table->rows[r];
        const std::string where = "--features row " + std::to_string(r + 2);
        const int sp = static_cast<int>(number(row[sp_col], where, v));
        FeatureClass actual = FeatureClass::B;
        if (const auto it = truth.find(row[id_col]); it != truth.end()) {
          if (const auto jt = it->second.find(sp); jt != it->second.end()) actual = jt->second;
        }
        for (int k = 1; k < kFeatureClasses; ++k) {
          const auto cls = static_cast<FeatureClass>(k);
          const std::string name(to_string(cls));
          scores[k - 1].push_back(number(row[table->column(name)], where, v));
          labels[k - 1].push_back(actual == cls ? 1 : 0);
        }
      }
      for (int k = 1; k < kFeatureClasses; ++k) {
        require_both_classes(labels[k - 1], std::string(to_string(static_cast<FeatureClass>(k))),
                             v);
      }
    }
    v.check();

    std::vector<BinaryTaskScore> result;
    for (int k = 1; k < kFeatureClasses; ++k) {
      result.push_back(score(std::string(to_string(static_cast<FeatureClass>(k))),
                             scores[k - 1], labels[k - 1]));
    }
    OutputSet out(resolve_output(o->out, g.output_root), stage);
    out.write("task2.json", classification_report("task2", result));
    out.finish();
  });
}

void add_task3(CLI::App* eval, const Globals& g) {
  struct Opts {
    fs::path classification, ground_truth, out;
  };
  auto o = std::make_shared<Opts>();
  auto* cmd = eval->add_subcommand("task3", "Lesion classification scores (JSON)");
  cmd->add_option("--classification", o->classification,
                  "classification.csv from infer classify");
  cmd->add_option("--ground-truth", o->ground_truth, "ISIC ground-truth CSV");
  cmd->add_option("--out", o->out, "Output directory");
  cmd->callback([o, &g] {
    const std::string stage = "evaluate.task3";
    Validator v(stage);
    const auto table = load_csv(o->classification, v, "--classification",
                                {"image_id", "melanoma_index", "sk_index"});
    const auto gt = load_ground_truth(o->ground_truth, v, "--ground-truth");
    v.given(o->out, "--out");
    std::vector<double> mel_score, sk_score;
    std::vector<int> mel_label, sk_label;
    if (table && gt) {
      std::map<std::string, std::size_t> row_of;
      const std::size_t id_col = table->column("image_id");
      for (std::size_t r = 0; r < table->rows.size(); ++r) row_of[table->rows[r][id_col]] = r;
      for (std::size_t i = 0; i < gt->ids.size(); ++i) {
        const auto it = row_of.find(gt->ids[i]);
        if (!v.require(it != row_of.end(),
                       "--classification: no row for '" + gt->ids[i] + "'")) {
          continue;
        }
        const auto& row = table->rows[it->second];
        const std::string where = "--classification '" + gt->ids[i] + "'";
        mel_score.push_back(number(row[table->column("melanoma_index")], where, v));
        sk_score.push_back(number(row[table->column("sk_index")], where, v));
        mel_label.push_back(gt->labels[i] == LesionClass::melanoma ? 1 : 0);
        sk_label.push_back(gt->labels[i] == LesionClass::seborrheic_keratosis ? 1 : 0);
      }
      require_both_classes(mel_label, "melanoma", v);
      require_both_classes(sk_label, "seborrheic_keratosis", v);
    }
    v.check();

    OutputSet out(resolve_output(o->out, g.output_root), stage);
    out.write("task3.json",
              classification_report("task3", {score("melanoma", mel_score, mel_label),
                                               score("seborrheic_keratosis", sk_score, sk_label)}));
    out.finish();
  });
}

}  // namespace

void add_evaluate(CLI::App& app, const Globals& g) {
  auto* eval = app.add_subcommand("evaluate", "Score predictions against ground truth");
  eval->require_subcommand(1);
  add_task1(eval, g);
  add_task2(eval, g);
  add_task3(eval, g);
}

void add_render(CLI::App& app, const Globals& g) {
  auto* render = app.add_subcommand("render", "Figure-style renderings");
  render->require_subcommand(1);

  struct OverlayOpts {
    fs::path images, masks, out;
  };
  auto oo = std::make_shared<OverlayOpts>();
  auto* overlay = render->add_subcommand("overlay", "Images with the mask outline drawn");
  overlay->add_option("--images", oo->images, "Image directory");
  overlay->add_option("--masks", oo->masks, "Mask directory");
  overlay->add_option("--out", oo->out, "Output directory");
  overlay->callback([oo, &g] {
    const std::string stage = "render.overlay";
    Validator v(stage);
    std::map<std::string, fs::path> images;
    if (v.existing_dir(oo->images, "--images")) images = list_images(oo->images);
    if (v.existing_dir(oo->masks, "--masks")) {
      for (const auto& [id, path] : images) {
        v.require(!find_mask(oo->masks, id).empty(), "--masks: no mask for '" + id + "'");
      }
    }
    v.given(oo->out, "--out");
    v.check();

    OutputSet out(resolve_output(oo->out, g.output_root), stage);
    for (const auto& [id, path] : images) {
      const Image img = read_image(path);
      // Masks from a different resolution are resampled onto the image.
      const BinaryMask mask = resize_mask(read_mask(find_mask(oo->masks, id)), img.height,
                                          img.width);
      out.write_png(id + "_overlay.png", overlay_outline(img, mask));
    }
    out.finish();
  });

  struct HeatOpts {
    fs::path masks, out;
  };
  auto ho = std::make_shared<HeatOpts>();
  auto* heat = render->add_subcommand("distance-heatmap", "Border-distance maps of masks");
  heat->add_option("--masks", ho->masks, "Mask directory");
  heat->add_option("--out", ho->out, "Output directory");
  heat->callback([ho, &g] {
    const std::string stage = "render.distance-heatmap";
    Validator v(stage);
    std::vector<std::string> ids;
    if (v.existing_dir(ho->masks, "--masks")) {
      ids = mask_ids(ho->masks);
      v.require(!ids.empty(), "--masks: no masks");
    }
    v.given(ho->out, "--out");
    v.check();

    OutputSet out(resolve_output(ho->out, g.output_root), stage);
    for (const auto& id : ids) {
      out.write_png(id + "_distance.png",
                    distance_heatmap(distance_map(read_mask(find_mask(ho->masks, id)))));
    }
    out.finish();
  });
}

}  // namespace dermkit::cli
