#pragma once

#include <span>
#include <vector>

#include "dermkit/tensor.hpp"

namespace dermkit {

// One positive weight per class.
class ClassWeights {
 public:
  ClassWeights() = default;
  explicit ClassWeights(std::vector<double> w);
  static ClassWeights uniform(int classes);

  int classes() const { return static_cast<int>(w_.size()); }
  double operator[](int k) const { return w_[k]; }
  const std::vector<double>& values() const { return w_; }

 private:
  std::vector<double> w_;
};

struct LossResult {
  double loss = 0.0;
  Tensor grad;  // dL/dscores, same shape as the scores
};

// Scores are N x K x H x W; every (n, y, x) position is one sample whose
// label is labels[(n * H + y) * W + x]. Per-image classifiers use H = W = 1.
//
//   L = (1/M) sum_i w[y_i] * -log softmax(f_i)[y_i]
//
// with M the number of samples. Uniform unit weights give the plain
// softmax cross-entropy.
LossResult weighted_softmax_loss(const Tensor& scores,
                                 std::span<const int> labels,
                                 const ClassWeights& weights);

// Softmax over the channel axis at every (n, y, x).
Tensor softmax_channels(const Tensor& scores);

}  // namespace dermkit
