#include "dermkit/augment.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <random>
#include <stdexcept>
#include <unordered_set>

#include "dermkit/csv.hpp"
#include "dermkit/error.hpp"
#include "dermkit/fileio.hpp"

namespace dermkit {

namespace {

std::string angle_tag(double angle) {
  return std::to_string(static_cast<long long>(std::lround(angle)));
}

const std::set<std::string>& feature_labels() {
  static const std::set<std::string> labels{"B", "PN", "NN", "MC", "S"};
  return labels;
}

}  // namespace

std::size_t DatasetManifest::count(const std::string& label) const {
  return static_cast<std::size_t>(std::count_if(
      records.begin(), records.end(),
      [&](const ManifestRecord& r) { return r.label == label; }));
}

std::map<std::string, std::size_t> DatasetManifest::class_counts() const {
  std::map<std::string, std::size_t> out;
  for (const auto& r : records) ++out[r.label];
  return out;
}

AugmentPlan AugmentPlan::isic_lesions() {
  AugmentPlan p;
  p.rotation_step = {{"melanoma", 18}, {"seborrheic_keratosis", 18}, {"nevus", 45}};
  return p;
}

AugmentPlan AugmentPlan::isic_patches() {
  AugmentPlan p;
  p.sample_targets = {{"B", 87089}, {"PN", 77325}};
  p.rotate_classes = {"NN", "MC", "S"};
  return p;
}

void check_unique_ids(const DatasetManifest& manifest) {
  std::unordered_set<std::string> seen;
  for (const auto& r : manifest.records) {
    if (!seen.insert(r.id).second) {
      throw std::invalid_argument("duplicate manifest id '" + r.id + "'");
    }
  }
}

DatasetManifest build_dr(const DatasetManifest& src, const AugmentPlan& plan) {
  for (const auto& [label, step] : plan.rotation_step) {
    if (step <= 0 || 360 % step != 0) {
      throw std::invalid_argument("rotation step " + std::to_string(step) +
                                  " for '" + label + "' does not divide 360");
    }
  }
  DatasetManifest out;
  for (const auto& r : src.records) {
    auto it = plan.rotation_step.find(r.label);
    if (it == plan.rotation_step.end()) {
      throw std::invalid_argument("no rotation step for class '" + r.label + "'");
    }
    const int step = it->second;
    for (int angle = 0; angle < 360; angle += step) {
      ManifestRecord rec = r;
      rec.angle_deg = r.angle_deg + angle;
      rec.id = r.id + "_r" + angle_tag(angle);
      out.records.push_back(std::move(rec));
    }
  }
  check_unique_ids(out);
  return out;
}

DatasetManifest build_dm(const DatasetManifest& dr, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  DatasetManifest out;
  out.records.reserve(dr.records.size());
  for (const auto& r : dr.records) {
    ManifestRecord rec = r;
    rec.flip = (rng() & 1u) ? FlipAxis::y : FlipAxis::x;
    rec.id = r.id + "_f" + std::string(to_string(rec.flip));
    out.records.push_back(std::move(rec));
  }
  return out;
}

DatasetManifest balance_patches(const DatasetManifest& src,
                                const AugmentPlan& plan, std::uint64_t seed) {
  std::map<std::string, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < src.records.size(); ++i) {
    const auto& label = src.records[i].label;
    if (!feature_labels().contains(label)) {
      throw std::invalid_argument("unknown patch class '" + label + "'");
    }
    by_class[label].push_back(i);
  }
  std::vector<char> keep(src.records.size(), 1);
  for (const auto& [label, target] : plan.sample_targets) {
    const auto& members = by_class[label];
    if (target > members.size()) {
      throw std::invalid_argument("target " + std::to_string(target) + " for '" +
                                  label + "' exceeds the " +
                                  std::to_string(members.size()) + " available");
    }
    const auto substream = static_cast<std::uint64_t>(
        std::distance(feature_labels().begin(), feature_labels().find(label)));
    std::seed_seq sseq{seed, substream};
    std::mt19937_64 rng(sseq);
    std::vector<std::size_t> chosen;
    std::sample(members.begin(), members.end(), std::back_inserter(chosen), target, rng);
    for (std::size_t i : members) keep[i] = 0;
    for (std::size_t i : chosen) keep[i] = 1;
  }
  DatasetManifest out;
  for (std::size_t i = 0; i < src.records.size(); ++i) {
    if (!keep[i]) continue;
    const auto& r = src.records[i];
    out.records.push_back(r);
    if (!plan.rotate_classes.contains(r.label)) continue;
    for (int angle : plan.patch_angles) {
      ManifestRecord rec = r;
      rec.angle_deg = r.angle_deg + angle;
      rec.id = r.id + "_r" + angle_tag(angle);
      out.records.push_back(std::move(rec));
    }
  }
  check_unique_ids(out);
  return out;
}

std::string manifest_to_csv(const DatasetManifest& manifest) {
  CsvTable t;
  t.header = {"id", "source_path", "label", "angle_deg", "flip_axis"};
  for (const auto& r : manifest.records) {
    t.rows.push_back({r.id, r.source_path, r.label, format_number(r.angle_deg),
                      std::string(to_string(r.flip))});
  }
  return format_csv(t);
}

DatasetManifest manifest_from_csv(const std::string& text) {
  const CsvTable t = parse_csv(text);
  DatasetManifest m;
  if (t.header.empty()) return m;
  const auto id = t.column("id");
  const auto src = t.column("source_path");
  const auto label = t.column("label");
  const auto angle = t.column("angle_deg");
  const auto flip = t.column("flip_axis");
  for (const auto& row : t.rows) {
    ManifestRecord r;
    r.id = row[id];
    r.source_path = row[src];
    r.label = row[label];
    try {
      r.angle_deg = std::stod(row[angle]);
    } catch (const std::exception&) {
      throw FormatError("manifest: bad angle '" + row[angle] + "'");
    }
    r.flip = parse_flip_axis(row[flip]);
    m.records.push_back(std::move(r));
  }
  check_unique_ids(m);
  return m;
}

void write_manifest(const std::filesystem::path& path,
                    const DatasetManifest& manifest) {
  write_file_atomic(path, manifest_to_csv(manifest));
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  return manifest_from_csv(read_file(path));
}

}  // namespace dermkit
