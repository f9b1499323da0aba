#pragma once

#include <cstdint>
#include <vector>

#include "dermkit/network.hpp"
#include "dermkit/parameters.hpp"
#include "dermkit/tensor.hpp"

namespace dermkit {

enum class Mode { train, eval };

inline constexpr double kBatchNormEpsilon = 1e-5;
inline constexpr double kBatchNormMomentum = 0.9;

struct LayerCache {
  // batch norm: per-channel statistics used by the forward pass
  std::vector<double> mean;
  std::vector<double> var;
  std::vector<double> inv_std;
  // max pool: flat in-plane index of the selected input per output element
  std::vector<std::int32_t> argmax;
};

// Everything backward() needs: the input, every layer output and the
// per-layer auxiliary state.
struct ForwardCache {
  Mode mode = Mode::eval;
  Tensor input;
  std::vector<Tensor> outputs;
  std::vector<LayerCache> aux;

  const Tensor& output() const { return outputs.back(); }
};

// Runs the network. In train mode batch norm normalizes with batch
// statistics (see update_running_stats); in eval mode it uses the running
// statistics. Throws ShapeError / NonFiniteError naming the layer.
ForwardCache forward(const NetworkSpec& net, const Parameters& params,
                     const Tensor& batch, Mode mode);

// Eval-mode forward that drops intermediate activations as soon as they
// are no longer needed.
Tensor predict(const NetworkSpec& net, const Parameters& params,
               const Tensor& batch);

// Gradients of the loss with respect to every parameter, given the
// gradient with respect to the network output. The result has exactly the
// layout of `params` (running statistics come back as zeros).
Parameters backward(const NetworkSpec& net, const Parameters& params,
                    const ForwardCache& cache, const Tensor& grad_output);

// Folds the batch statistics of a train-mode forward into the running
// statistics: running = momentum * running + (1 - momentum) * batch.
void update_running_stats(const NetworkSpec& net, Parameters& params,
                          const ForwardCache& cache,
                          double momentum = kBatchNormMomentum);

}  // namespace dermkit
