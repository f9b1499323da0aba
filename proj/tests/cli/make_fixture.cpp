// Writes a tiny ISIC-shaped dataset for the command-line smoke test:
// images/, masks/, ground_truth.csv and annotations.csv.
#include <cstdio>
#include <filesystem>
#include <string>

#include "dermkit/csv.hpp"
#include "dermkit/fileio.hpp"
#include "dermkit/image_io.hpp"
#include "dermkit/synthetic.hpp"

int main(int argc, char** argv) {
  using namespace dermkit;
  namespace fs = std::filesystem;
  if (argc != 2) {
    std::fprintf(stderr, "usage: make_fixture DIR\n");
    return 2;
  }
  const fs::path dir = argv[1];
  fs::create_directories(dir / "images");
  fs::create_directories(dir / "masks");
  CsvTable gt;
  gt.header = {"image_id", "melanoma", "seborrheic_keratosis"};
  CsvTable ann;
  ann.header = {"image_id", "superpixel_label", "feature_class"};
  for (int i = 0; i < 9; ++i) {
    const auto cls = static_cast<LesionClass>(i % kLesionClasses);
    const LesionSample s = blob_sample(cls, 40 + i, {.side = 72});
    char id[32];
    std::snprintf(id, sizeof id, "ISIC_%07d", i);
    write_png(dir / "images" / (std::string(id) + ".png"), s.image);
    write_mask_png(dir / "masks" / (std::string(id) + "_segmentation.png"), s.mask);
    gt.rows.push_back({id, cls == LesionClass::melanoma ? "1.0" : "0.0",
                       cls == LesionClass::seborrheic_keratosis ? "1.0" : "0.0"});
    // Superpixels 1-4 of every image carry one of the four scored features.
    for (int k = 1; k < kFeatureClasses; ++k) {
      ann.rows.push_back({id, std::to_string((k + i) % 4 + 1),
                          std::string(to_string(static_cast<FeatureClass>(k)))});
    }
  }
  write_file_atomic(dir / "ground_truth.csv", format_csv(gt));
  write_file_atomic(dir / "annotations.csv", format_csv(ann));
  return 0;
}
