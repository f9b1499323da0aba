#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "dermkit/network.hpp"
#include "dermkit/tensor.hpp"

namespace dermkit {

// Learnable state of one layer. Conv weights are (out, in, kh, kw), dense
// weights (out, in, 1, 1), biases (1, out, 1, 1). Batch-norm layers keep the
// scale in `weight`, the shift in `bias` and their running statistics.
// Parameter-free layers hold empty tensors.
struct LayerParams {
  Tensor weight;
  Tensor bias;
  Tensor running_mean;
  Tensor running_var;

  friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

struct Parameters {
  std::vector<LayerParams> layers;

  // Visits every trainable tensor (weights and biases) in layer order.
  void for_each_trainable(const std::function<void(Tensor&)>& fn);
  void for_each_trainable(const std::function<void(const Tensor&)>& fn) const;

  std::size_t trainable_count() const;

  friend bool operator==(const Parameters&, const Parameters&) = default;
};

// He (fan-in) normal initialization for conv/dense, zero biases,
// batch-norm scale 1 and shift 0, running mean 0 and variance 1.
Parameters init_parameters(const NetworkSpec& net, std::uint64_t seed);

// Same shapes as `params`, all zeros.
Parameters zeros_like(const Parameters& params);

// Throws ShapeError if `params` does not belong to `net`.
void check_parameters(const NetworkSpec& net, const Parameters& params);

}  // namespace dermkit
