#pragma once

#include "dermkit/parameters.hpp"

namespace dermkit {

struct SgdConfig {
  double learning_rate = 0.01;
  double momentum = 0.9;
  double gamma = 0.1;         // step-decay factor
  int decay_every = 0;        // epochs between decays; 0 = ceil(epochs / 2)
  double weight_decay = 0.0;  // L2 coefficient added to the gradient
};

struct OptimizerState {
  Parameters velocity;  // mirrors the trainable tensors of Parameters
  double learning_rate = 0.01;
  double momentum = 0.9;
  double gamma = 0.1;
  double weight_decay = 0.0;
  int decay_every = 0;  // 0 disables decay
  int epoch = 0;
};

// `total_epochs` resolves the default decay step.
OptimizerState make_optimizer(const Parameters& params, const SgdConfig& config,
                              int total_epochs);

// v <- momentum * v - lr * (g + weight_decay * theta);  theta <- theta + v
void sgd_update(Parameters& params, const Parameters& grads,
                OptimizerState& state);

// Advances the epoch counter; lr <- lr * gamma on every decay boundary.
void end_epoch(OptimizerState& state);

}  // namespace dermkit
