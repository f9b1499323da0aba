#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "dermkit/transform.hpp"

namespace dermkit {

// One dataset item: a source file plus the transform chain (rotate, then
// flip) to apply when the sample is materialized.
struct ManifestRecord {
  std::string id;
  std::string source_path;
  std::string label;
  double angle_deg = 0.0;
  FlipAxis flip = FlipAxis::none;

  friend bool operator==(const ManifestRecord&, const ManifestRecord&) = default;
};

struct DatasetManifest {
  std::vector<ManifestRecord> records;

  std::size_t size() const { return records.size(); }
  std::size_t count(const std::string& label) const;
  std::map<std::string, std::size_t> class_counts() const;

  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

struct AugmentPlan {
  // build_dr: rotation step in degrees per class; must divide 360.
  std::map<std::string, int> rotation_step;
  // balance_patches: classes randomly down-sampled to a fixed count.
  std::map<std::string, std::size_t> sample_targets;
  // balance_patches: classes expanded with the original plus these angles.
  std::set<std::string> rotate_classes;
  std::vector<int> patch_angles{90, 180, 270};

  // Lesion classes at 18 / 18 / 45 degrees.
  static AugmentPlan isic_lesions();
  // B -> 87,089 and PN -> 77,325 samples; NN, MC, S rotated x4.
  static AugmentPlan isic_patches();
};

// Throws if two records share an id.
void check_unique_ids(const DatasetManifest& manifest);

// Every source record yields 360/step records at angles 0, step, 2*step, ...
DatasetManifest build_dr(const DatasetManifest& src, const AugmentPlan& plan);

// Same records, each with one random x- or y-flip drawn from `seed`.
// Record i of the result pairs with record i of `dr`.
DatasetManifest build_dm(const DatasetManifest& dr, std::uint64_t seed);

// Down-samples the sample_targets classes without replacement and expands
// the rotate_classes with patch_angles. Labels must be B, PN, NN, MC or S.
DatasetManifest balance_patches(const DatasetManifest& src,
                                const AugmentPlan& plan, std::uint64_t seed);

// CSV columns: id,source_path,label,angle_deg,flip_axis
std::string manifest_to_csv(const DatasetManifest& manifest);
DatasetManifest manifest_from_csv(const std::string& text);
void write_manifest(const std::filesystem::path& path,
                    const DatasetManifest& manifest);
DatasetManifest read_manifest(const std::filesystem::path& path);

}  // namespace dermkit
