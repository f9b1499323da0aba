#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "dermkit/loss.hpp"
#include "dermkit/network.hpp"
#include "dermkit/optimizer.hpp"
#include "dermkit/parameters.hpp"

namespace dermkit {

struct Batch {
  Tensor input;
  std::vector<int> labels;  // one per output position (see weighted_softmax_loss)
};

// Assembles the samples with the given dataset indices into one batch.
using BatchFn = std::function<Batch(std::span<const std::size_t> indices)>;

struct TrainConfig {
  SgdConfig sgd;
  int epochs = 10;
  int batch_size = 128;
  std::uint64_t seed = 0;
  ClassWeights weights;
  double bn_momentum = 0.9;
};

struct EpochLog {
  int epoch = 0;
  double learning_rate = 0.0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;

  friend bool operator==(const EpochLog&, const EpochLog&) = default;
};

struct TrainResult {
  Parameters params;
  std::vector<EpochLog> log;
  int best_epoch = -1;  // -1: initialization returned
};

// Optional per-epoch progress sink; must not influence the result.
using ProgressFn = std::function<void(const EpochLog&)>;

// Mini-batch SGD with momentum over `train_count` samples. The sample order
// is reshuffled every epoch from `seed`. After each epoch the network is
// evaluated (eval mode) on the validation samples; the parameters with the
// lowest validation loss are returned (the final ones if there is no
// validation data). Throws DivergenceError on a non-finite loss.
TrainResult train_network(const NetworkSpec& net, Parameters init,
                          std::size_t train_count, const BatchFn& train_batch,
                          std::size_t val_count, const BatchFn& val_batch,
                          const TrainConfig& config,
                          const ProgressFn& progress = {});

struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;  // fraction of positions whose argmax equals the label
};

Evaluation evaluate(const NetworkSpec& net, const Parameters& params,
                    std::size_t count, const BatchFn& batch, int batch_size,
                    const ClassWeights& weights);

// One JSON object per line: {"epoch":..,"lr":..,"train_loss":..,...}.
std::string log_to_json_lines(std::span<const EpochLog> log);

}  // namespace dermkit
