#include <set>

#include "doctest.h"
#include "dermkit/augment.hpp"

using namespace dermkit;

namespace {

DatasetManifest lesion_sources(std::size_t mel, std::size_t sk, std::size_t nev) {
  DatasetManifest m;
  auto add = [&](const std::string& label, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::string id = label + "_" + std::to_string(i);
      m.records.push_back({id, "images/" + id + ".png", label, 0.0, FlipAxis::none});
    }
  };
  add("melanoma", mel);
  add("seborrheic_keratosis", sk);
  add("nevus", nev);
  return m;
}

DatasetManifest patch_sources(std::map<std::string, std::size_t> counts) {
  DatasetManifest m;
  for (const auto& [label, n] : counts) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::string id = label + "_" + std::to_string(i);
      m.records.push_back({id, "patches/" + id + ".png", label, 0.0, FlipAxis::none});
    }
  }
  return m;
}

}  // namespace

TEST_CASE("lesion augmentation counts") {
  const DatasetManifest src = lesion_sources(374, 254, 1372);
  const DatasetManifest dr = build_dr(src, AugmentPlan::isic_lesions());
  CHECK(dr.count("melanoma") == 7480);
  CHECK(dr.count("seborrheic_keratosis") == 5080);
  CHECK(dr.count("nevus") == 10976);
  CHECK(dr.size() == 23536);
  const DatasetManifest dm = build_dm(dr, 7);
  CHECK(dm.size() == dr.size());
  CHECK(build_dm(dr, 7) == dm);
  CHECK(build_dr(DatasetManifest{}, AugmentPlan::isic_lesions()).size() == 0);
  check_unique_ids(dr);
  check_unique_ids(dm);

  std::set<std::pair<std::string, double>> pairs;
  for (std::size_t i = 0; i < dr.size(); ++i) {
    pairs.emplace(dr.records[i].source_path, dr.records[i].angle_deg);
    CHECK(dm.records[i].source_path == dr.records[i].source_path);
    CHECK(dm.records[i].angle_deg == dr.records[i].angle_deg);
    CHECK(dm.records[i].flip != FlipAxis::none);
  }
  CHECK(pairs.size() == dr.size());
}

TEST_CASE("build_dr count law on random manifests") {
  for (int step : {1, 15, 30, 45, 90, 120, 180, 360}) {
    AugmentPlan plan;
    plan.rotation_step = {{"melanoma", step}, {"seborrheic_keratosis", 360}, {"nevus", step}};
    const DatasetManifest src = lesion_sources(3 + step % 5, 2, 4);
    const DatasetManifest dr = build_dr(src, plan);
    CHECK(dr.count("melanoma") == src.count("melanoma") * (360 / step));
    CHECK(dr.count("seborrheic_keratosis") == 2);
    CHECK(dr.count("nevus") == 4 * static_cast<std::size_t>(360 / step));
  }
  AugmentPlan bad;
  bad.rotation_step = {{"melanoma", 7}};
  CHECK_THROWS(build_dr(lesion_sources(1, 0, 0), bad));
}

TEST_CASE("patch balancing counts") {
  const DatasetManifest src =
      patch_sources({{"B", 90000}, {"PN", 80000}, {"NN", 3227}, {"MC", 3000}, {"S", 2081}});
  const DatasetManifest bal = balance_patches(src, AugmentPlan::isic_patches(), 3);
  CHECK(bal.count("NN") == 12908);
  CHECK(bal.count("S") == 8324);
  CHECK(bal.count("MC") == 12000);
  CHECK(bal.count("B") == 87089);
  CHECK(bal.count("PN") == 77325);
  CHECK(balance_patches(src, AugmentPlan::isic_patches(), 3) == bal);
  check_unique_ids(bal);

  std::set<std::pair<std::string, double>> pairs;
  std::set<std::string> b_sources;
  for (const auto& r : bal.records) {
    if (r.label == "B") b_sources.insert(r.source_path);
    pairs.emplace(r.source_path, r.angle_deg);
  }
  CHECK(b_sources.size() == 87089);  // without replacement
  CHECK(pairs.size() == bal.size());
}

TEST_CASE("manifest csv round trip") {
  const DatasetManifest dm = build_dm(build_dr(lesion_sources(2, 1, 1), AugmentPlan::isic_lesions()), 1);
  CHECK(manifest_from_csv(manifest_to_csv(dm)) == dm);
}
