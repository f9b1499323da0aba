#include "dermkit/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "dermkit/engine.hpp"
#include "dermkit/error.hpp"
#include "json.hpp"

namespace dermkit {

namespace {

std::size_t correct_positions(const Tensor& scores,
                              std::span<const int> labels) {
  const Shape& s = scores.shape();
  const std::size_t plane = s.plane_size();
  std::size_t hits = 0;
  for (int n = 0; n < s.n; ++n) {
    const double* f = scores.sample(n).data();
    for (std::size_t q = 0; q < plane; ++q) {
      int best = 0;
      for (int k = 1; k < s.c; ++k) {
        if (f[k * plane + q] > f[best * plane + q]) best = k;
      }
      hits += best == labels[n * plane + q];
    }
  }
  return hits;
}

}  // namespace

Evaluation evaluate(const NetworkSpec& net, const Parameters& params,
                    std::size_t count, const BatchFn& batch, int batch_size,
                    const ClassWeights& weights) {
  Evaluation ev;
  if (count == 0) return ev;
  double loss_sum = 0.0;
  std::size_t hits = 0;
  std::size_t positions = 0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < count; start += batch_size) {
    const std::size_t end = std::min(count, start + batch_size);
    idx.resize(end - start);
    std::iota(idx.begin(), idx.end(), start);
    Batch b = batch(idx);
    const Tensor scores = predict(net, params, b.input);
    const auto r = weighted_softmax_loss(scores, b.labels, weights);
    loss_sum += r.loss * static_cast<double>(b.labels.size());
    hits += correct_positions(scores, b.labels);
    positions += b.labels.size();
  }
  ev.loss = loss_sum / static_cast<double>(positions);
  ev.accuracy = static_cast<double>(hits) / static_cast<double>(positions);
  return ev;
}

TrainResult train_network(const NetworkSpec& net, Parameters init,
                          std::size_t train_count, const BatchFn& train_batch,
                          std::size_t val_count, const BatchFn& val_batch,
                          const TrainConfig& config,
                          const ProgressFn& progress) {
  if (config.epochs < 0) throw std::invalid_argument("negative epoch count");
  if (config.batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  TrainResult result;
  result.params = std::move(init);
  if (config.epochs == 0) return result;
  if (train_count == 0) throw std::invalid_argument("empty training set");

  Parameters params = result.params;
  OptimizerState opt = make_optimizer(params, config.sgd, config.epochs);
  std::vector<std::size_t> order(train_count);
  std::iota(order.begin(), order.end(), 0);
  double best_val = std::numeric_limits<double>::infinity();

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::mt19937_64 rng(config.seed * 1000003ULL + static_cast<std::uint64_t>(epoch));
    std::shuffle(order.begin(), order.end(), rng);
    const double lr = opt.learning_rate;
    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < train_count; start += config.batch_size) {
      const std::size_t end = std::min(train_count, start + config.batch_size);
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      Batch b = train_batch(idx);
      ForwardCache cache;
      LossResult loss;
      try {
        cache = forward(net, params, b.input, Mode::train);
        loss = weighted_softmax_loss(cache.output(), b.labels, config.weights);
      } catch (const NonFiniteError& e) {
        throw DivergenceError("epoch " + std::to_string(epoch) + ", batch at " +
                              std::to_string(start) + ": " + e.what());
      } catch (const std::invalid_argument& e) {
        if (std::string(e.what()) != "non-finite scores") throw;
        throw DivergenceError("epoch " + std::to_string(epoch) + ", batch at " +
                              std::to_string(start) + ": non-finite scores");
      }
      if (!std::isfinite(loss.loss)) {
        throw DivergenceError("epoch " + std::to_string(epoch) + ", batch at " +
                              std::to_string(start) + ": loss is not finite (lr " +
                              std::to_string(lr) + ")");
      }
      const Parameters grads = backward(net, params, cache, loss.grad);
      update_running_stats(net, params, cache, config.bn_momentum);
      sgd_update(params, grads, opt);
      loss_sum += loss.loss * static_cast<double>(end - start);
      seen += end - start;
    }
    end_epoch(opt);

    EpochLog entry;
    entry.epoch = epoch + 1;
    entry.learning_rate = lr;
    entry.train_loss = loss_sum / static_cast<double>(seen);
    if (val_count > 0) {
      const Evaluation ev = evaluate(net, params, val_count, val_batch,
                                     config.batch_size, config.weights);
      entry.val_loss = ev.loss;
      entry.val_accuracy = ev.accuracy;
      if (ev.loss < best_val) {
        best_val = ev.loss;
        result.params = params;
        result.best_epoch = entry.epoch;
      }
    } else {
      result.params = params;
      result.best_epoch = entry.epoch;
    }
    result.log.push_back(entry);
    if (progress) progress(entry);
  }
  return result;
}

std::string log_to_json_lines(std::span<const EpochLog> log) {
  std::ostringstream os;
  for (const auto& e : log) {
    nlohmann::ordered_json j;
    j["epoch"] = e.epoch;
    j["lr"] = e.learning_rate;
    j["train_loss"] = e.train_loss;
    j["val_loss"] = e.val_loss;
    j["val_acc"] = e.val_accuracy;
    os << j.dump() << "\n";
  }
  return os.str();
}

}  // namespace dermkit
