#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "dermkit/augment.hpp"
#include "dermkit/checkpoint.hpp"
#include "dermkit/error.hpp"
#include "dermkit/lfn.hpp"
#include "dermkit/licu.hpp"
#include "dermkit/lin.hpp"
#include "dermkit/metrics.hpp"
#include "dermkit/morphology.hpp"
#include "dermkit/superpixel.hpp"
#include "dermkit/synthetic.hpp"

namespace py = pybind11;
using namespace dermkit;

namespace {

using F64 = py::array_t<double, py::array::c_style | py::array::forcecast>;
using U8 = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

void require_ndim(const py::buffer_info& b, int ndim, const char* what) {
  if (b.ndim != ndim) {
    throw py::value_error(std::string(what) + " must have " + std::to_string(ndim) +
                          " dimensions");
  }
}

// H x W x 3 array in [0, 1] <-> channel-planar Image.
Image image_from(const F64& a) {
  const auto b = a.request();
  require_ndim(b, 3, "image");
  if (b.shape[2] != 3) throw py::value_error("image must be H x W x 3");
  const int h = static_cast<int>(b.shape[0]);
  const int w = static_cast<int>(b.shape[1]);
  Image img(h, w);
  const auto* p = static_cast<const double*>(b.ptr);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) img.at(c, y, x) = p[(y * w + x) * 3 + c];
  check_image(img);
  return img;
}

F64 image_to(const Image& img) {
  F64 out({img.height, img.width, 3});
  auto r = out.mutable_unchecked<3>();
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c) r(y, x, c) = img.at(c, y, x);
  return out;
}

BinaryMask mask_from(const U8& a) {
  const auto b = a.request();
  require_ndim(b, 2, "mask");
  BinaryMask m(static_cast<int>(b.shape[0]), static_cast<int>(b.shape[1]));
  const auto* p = static_cast<const std::uint8_t*>(b.ptr);
  for (std::size_t i = 0; i < m.size(); ++i) m.data[i] = p[i] != 0;
  return m;
}

template <class T>
py::array_t<T> grid_to(const Grid<T>& g) {
  py::array_t<T> out({g.height, g.width});
  std::copy(g.data.begin(), g.data.end(), out.mutable_data());
  return out;
}

Grid<double> grid_from(const double* p, int h, int w) {
  Grid<double> g(h, w);
  std::copy(p, p + g.size(), g.data.begin());
  return g;
}

// 3 x H x W array of melanoma, seborrheic keratosis and nevus maps.
ClassMaps maps_from(const F64& a) {
  const auto b = a.request();
  require_ndim(b, 3, "maps");
  if (b.shape[0] != kLesionClasses) throw py::value_error("maps must be 3 x H x W");
  const int h = static_cast<int>(b.shape[1]);
  const int w = static_cast<int>(b.shape[2]);
  const auto* p = static_cast<const double*>(b.ptr);
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  return {grid_from(p, h, w), grid_from(p + plane, h, w), grid_from(p + 2 * plane, h, w)};
}

F64 maps_to(const ClassMaps& m) {
  const int h = m[0].height;
  const int w = m[0].width;
  F64 out({kLesionClasses, h, w});
  double* p = out.mutable_data();
  for (const auto& g : m) p = std::copy(g.data.begin(), g.data.end(), p);
  return out;
}

// kPixelClasses x H x W summed probability maps.
CoarseMaps coarse_from(const F64& a, int runs) {
  const auto b = a.request();
  require_ndim(b, 3, "coarse maps");
  if (b.shape[0] != kPixelClasses) throw py::value_error("coarse maps must be 4 x H x W");
  const Shape s{1, kPixelClasses, static_cast<int>(b.shape[1]), static_cast<int>(b.shape[2])};
  const auto* p = static_cast<const double*>(b.ptr);
  CoarseMaps m;
  m.scores = Tensor(s, std::vector<double>(p, p + s.size()));
  m.runs = runs;
  return m;
}

F64 coarse_to(const CoarseMaps& m) {
  const Shape& s = m.scores.shape();
  F64 out({s.c, s.h, s.w});
  std::copy(m.scores.data(), m.scores.data() + s.size(), out.mutable_data());
  return out;
}

py::dict metrics_dict(const SegMetrics& m) {
  py::dict d;
  d["AC"] = m.accuracy;
  d["JA"] = m.jaccard;
  d["DI"] = m.dice;
  d["SE"] = m.sensitivity;
  d["SP"] = m.specificity;
  return d;
}

py::tuple lesion_index_tuple(const LesionIndex& idx) {
  return py::make_tuple(idx.values[0], idx.values[1], idx.values[2]);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Dermoscopic lesion analysis: LIN, LICU, LFN, SLIC and ISIC metrics";

  py::register_exception<NoLesionFound>(m, "NoLesionFound");
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<DivergenceError>(m, "DivergenceError");

  m.attr("FEATURE_CLASSES") = py::make_tuple("B", "PN", "NN", "MC", "S");
  m.attr("LESION_CLASSES") = py::make_tuple("melanoma", "seborrheic_keratosis", "nevus");

  // imaging / superpixel
  m.def(
      "slic",
      [](const F64& image, int k, double compactness, int max_iters) {
        return grid_to(slic(image_from(image), {k, compactness, max_iters}));
      },
      py::arg("image"), py::arg("k") = 1000, py::arg("compactness") = 10.0,
      py::arg("max_iters") = 10, "SLIC label map (int32, H x W) of an H x W x 3 image.");
  m.def(
      "distance_map", [](const U8& mask) { return grid_to(distance_map(mask_from(mask))); },
      py::arg("mask"), "Euclidean distance of every lesion pixel to the lesion border.");
  m.def(
      "extract_patches",
      [](const std::string& image_id, const F64& image, const py::array_t<std::int32_t>& labels) {
        const auto b = labels.request();
        require_ndim(b, 2, "labels");
        LabelMap l(static_cast<int>(b.shape[0]), static_cast<int>(b.shape[1]));
        const auto* p = static_cast<const std::int32_t*>(b.ptr);
        std::copy(p, p + l.size(), l.data.begin());
        py::list out;
        for (const auto& r : extract_patches(image_id, image_from(image), l, {})) {
          out.append(py::make_tuple(r.superpixel, image_to(r.pixels)));
        }
        return out;
      },
      py::arg("image_id"), py::arg("image"), py::arg("labels"),
      "(superpixel, 56 x 56 x 3 patch) for every superpixel.");

  // licu
  m.def(
      "normalize_possibilities", [](const F64& maps) {
        return maps_to(normalize_possibilities(maps_from(maps)));
      },
      py::arg("maps"), "Per-pixel min-shifted normalization of 3 x H x W class maps.");
  m.def(
      "lesion_index",
      [](const F64& maps, const U8& mask, bool use_licu) {
        const BinaryMask mk = mask_from(mask);
        ClassMaps p = normalize_possibilities(maps_from(maps));
        if (use_licu) p = refine(p, distance_map(mk));
        return lesion_index_tuple(lesion_index(p, mk));
      },
      py::arg("maps"), py::arg("mask"), py::arg("use_licu") = true,
      "(melanoma, seborrheic keratosis, nevus) index of 3 x H x W maps over a mask.");
  m.def(
      "segment", [](const F64& coarse) { return grid_to(segment(coarse_from(coarse, 1))); },
      py::arg("coarse"), "Lesion mask from 4 x H x W coarse possibility maps.");
  m.def(
      "classify_lesion",
      [](const F64& coarse, bool use_licu) {
        const Classification c = classify_lesion(coarse_from(coarse, 1), use_licu);
        return py::make_tuple(lesion_index_tuple(c.index), grid_to(c.mask), c.whole_image);
      },
      py::arg("coarse"), py::arg("use_licu") = true,
      "(indexes, mask, whole_image) for 4 x H x W coarse possibility maps.");

  // networks
  m.def(
      "infer_multiscale",
      [](const std::vector<std::filesystem::path>& checkpoints, const F64& image,
         const std::vector<int>& scales) {
        if (checkpoints.empty()) throw py::value_error("no checkpoints");
        NetworkSpec net;
        std::vector<Parameters> params;
        for (const auto& p : checkpoints) {
          Checkpoint c = load_checkpoint(p);
          if (params.empty()) net = c.net;
          else if (!(c.net == net)) throw py::value_error("checkpoint architectures differ");
          params.push_back(std::move(c.params));
        }
        return coarse_to(infer_multiscale(net, params, image_from(image), scales));
      },
      py::arg("checkpoints"), py::arg("image"), py::arg("scales") = std::vector<int>{300, 500},
      "Summed 4 x H x W class probabilities over checkpoints and scales.");
  m.def(
      "classify_patches",
      [](const std::filesystem::path& checkpoint, const std::vector<F64>& patches) {
        const Checkpoint c = load_checkpoint(checkpoint);
        std::vector<Image> images;
        for (const auto& p : patches) images.push_back(image_from(p));
        const auto probs = classify_patches(c.net, c.params, images);
        py::array_t<double> out({static_cast<py::ssize_t>(probs.size()),
                                 static_cast<py::ssize_t>(kFeatureClasses)});
        double* o = out.mutable_data();
        for (const auto& p : probs) o = std::copy(p.begin(), p.end(), o);
        return out;
      },
      py::arg("checkpoint"), py::arg("patches"),
      "N x 5 feature-class probabilities of 56 x 56 x 3 patches.");
  m.def(
      "network_text",
      [](const std::string& kind, const std::string& variant, bool batch_norm) {
        if (kind == "lfn") return to_text(build_lfn(parse_lfn_variant(variant), {batch_norm}));
        if (kind == "mini_fcrn") return to_text(build_mini_fcrn({.batch_norm = batch_norm}));
        throw py::value_error("kind must be 'lfn' or 'mini_fcrn'");
      },
      py::arg("kind"), py::arg("variant") = "standard", py::arg("batch_norm") = true,
      "Declarative text of a built-in architecture.");

  // augment
  m.def(
      "build_dr",
      [](const std::vector<std::string>& ids, const std::vector<std::string>& labels,
         const std::map<std::string, int>& steps) {
        if (ids.size() != labels.size()) throw py::value_error("ids and labels differ in length");
        DatasetManifest src;
        for (std::size_t i = 0; i < ids.size(); ++i) {
          src.records.push_back({ids[i], ids[i], labels[i], 0.0, FlipAxis::none});
        }
        AugmentPlan plan;
        plan.rotation_step = steps;
        return manifest_to_csv(build_dr(src, plan));
      },
      py::arg("ids"), py::arg("labels"),
      py::arg("steps") = std::map<std::string, int>{{"melanoma", 18},
                                                    {"seborrheic_keratosis", 18},
                                                    {"nevus", 45}},
      "DR manifest CSV: every source rotated in steps of its class's angle.");
  m.def(
      "build_dm",
      [](const std::string& dr_csv, std::uint64_t seed) {
        return manifest_to_csv(build_dm(manifest_from_csv(dr_csv), seed));
      },
      py::arg("dr_csv"), py::arg("seed"), "DM manifest CSV: one random flip per DR record.");

  // metrics
  m.def(
      "seg_metrics",
      [](const U8& pred, const U8& truth) {
        return metrics_dict(seg_metrics(confusion(mask_from(pred), mask_from(truth))));
      },
      py::arg("pred"), py::arg("truth"), "AC, JA, DI, SE and SP of a predicted mask.");
  m.def(
      "roc_auc",
      [](const std::vector<double>& scores, const std::vector<int>& labels) {
        const RocResult r = roc_auc(scores, labels);
        std::vector<double> fpr, tpr;
        for (const auto& p : r.curve) {
          fpr.push_back(p.fpr);
          tpr.push_back(p.tpr);
        }
        return py::make_tuple(r.auc, py::array(py::cast(fpr)), py::array(py::cast(tpr)));
      },
      py::arg("scores"), py::arg("labels"), "(auc, fpr, tpr) with ties counted one half.");
  m.def("average_precision",
        [](const std::vector<double>& scores, const std::vector<int>& labels) {
          return average_precision(scores, labels);
        },
        py::arg("scores"), py::arg("labels"));

  // synthetic data
  m.def(
      "texture_patch",
      [](const std::string& cls, std::uint64_t seed) {
        return image_to(texture_patch(parse_feature_class(cls), seed));
      },
      py::arg("feature_class"), py::arg("seed"));
  m.def(
      "blob_sample",
      [](const std::string& cls, std::uint64_t seed, int side, bool corrupt_boundary) {
        const LesionSample s =
            blob_sample(parse_lesion_class(cls), seed, {side, corrupt_boundary});
        return py::make_tuple(image_to(s.image), grid_to(s.mask));
      },
      py::arg("lesion_class"), py::arg("seed"), py::arg("side") = 160,
      py::arg("corrupt_boundary") = false, "(image, mask) with one coloured blob.");
}
