#pragma once

#include <cstdint>

#include "dermkit/lfn.hpp"
#include "dermkit/lin.hpp"

namespace dermkit {

// Seeded 56x56 texture patch whose class is carried by the pattern alone:
//   B plain, PN horizontal stripes, NN diagonal stripes, MC dots, S rings.
// Colours, period, phase and noise are random.
Image texture_patch(FeatureClass cls, std::uint64_t seed);

// per_class patches of every class, interleaved (index i has class i % 5),
// generated on demand from (seed, i).
PatchSource texture_patch_source(std::size_t per_class, std::uint64_t seed);

struct BlobOptions {
  int side = 160;
  // Repaints the outer ring of the blob (outer 35% of the radius) in the
  // colour of another class; the label and mask are unchanged.
  bool corrupt_boundary = false;
};

// One irregular coloured blob on noisy skin-toned background. The class is
// carried by the blob colour and texture.
LesionSample blob_sample(LesionClass cls, std::uint64_t seed,
                         const BlobOptions& options = {});

}  // namespace dermkit
