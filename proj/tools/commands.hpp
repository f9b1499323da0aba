#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dermkit/lin.hpp"
#include "pipeline.hpp"

namespace dermkit::cli {

struct Globals {
  fs::path output_root;
  bool quiet = false;
};

void add_preprocess(CLI::App& app, const Globals& g);
void add_augment(CLI::App& app, const Globals& g);
void add_superpixel(CLI::App& app, const Globals& g);
void add_train(CLI::App& app, const Globals& g);
void add_infer(CLI::App& app, const Globals& g);
void add_evaluate(CLI::App& app, const Globals& g);
void add_render(CLI::App& app, const Globals& g);

// ISIC ground truth: image_id,melanoma,seborrheic_keratosis with nevus
// meaning neither column is set.
struct GroundTruth {
  std::vector<std::string> ids;
  std::vector<LesionClass> labels;
};
GroundTruth read_ground_truth(const fs::path& path);

// Problems are appended to `v` rather than thrown.
std::optional<GroundTruth> load_ground_truth(const fs::path& path, Validator& v,
                                             std::string_view option);

void progress(const Globals& g, std::string_view stage, const std::string& line);

}  // namespace dermkit::cli
