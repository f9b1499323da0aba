#include "dermkit/optimizer.hpp"

#include <stdexcept>

#include "dermkit/error.hpp"

namespace dermkit {

OptimizerState make_optimizer(const Parameters& params, const SgdConfig& config,
                              int total_epochs) {
  if (!(config.learning_rate > 0.0)) {
    throw std::invalid_argument("learning rate must be positive");
  }
  if (config.momentum < 0.0 || config.momentum >= 1.0) {
    throw std::invalid_argument("momentum must be in [0, 1)");
  }
  OptimizerState s;
  s.velocity = zeros_like(params);
  s.learning_rate = config.learning_rate;
  s.momentum = config.momentum;
  s.gamma = config.gamma;
  s.weight_decay = config.weight_decay;
  s.decay_every = config.decay_every > 0 ? config.decay_every
                                         : (total_epochs + 1) / 2;
  return s;
}

void sgd_update(Parameters& params, const Parameters& grads,
                OptimizerState& state) {
  if (params.layers.size() != grads.layers.size() ||
      params.layers.size() != state.velocity.layers.size()) {
    throw ShapeError(-1, "optimizer: parameter/gradient layer count mismatch");
  }
  auto step = [&](Tensor& theta, const Tensor& g, Tensor& v, int layer) {
    if (!(theta.shape() == g.shape()) || !(theta.shape() == v.shape())) {
      throw ShapeError(layer, "optimizer: tensor shape mismatch");
    }
    double* t = theta.data();
    const double* gp = g.data();
    double* vp = v.data();
    for (std::size_t k = 0; k < theta.size(); ++k) {
      vp[k] = state.momentum * vp[k] -
              state.learning_rate * (gp[k] + state.weight_decay * t[k]);
      t[k] += vp[k];
    }
  };
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    auto& p = params.layers[i];
    const auto& g = grads.layers[i];
    auto& v = state.velocity.layers[i];
    const int id = static_cast<int>(i);
    if (!p.weight.empty()) step(p.weight, g.weight, v.weight, id);
    if (!p.bias.empty()) step(p.bias, g.bias, v.bias, id);
  }
}

void end_epoch(OptimizerState& state) {
  ++state.epoch;
  if (state.decay_every > 0 && state.epoch % state.decay_every == 0) {
    state.learning_rate *= state.gamma;
  }
}

}  // namespace dermkit
