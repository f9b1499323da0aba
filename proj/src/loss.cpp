#include "dermkit/loss.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dermkit {

ClassWeights::ClassWeights(std::vector<double> w) : w_(std::move(w)) {
  if (w_.empty()) throw std::invalid_argument("class weights are empty");
  for (double v : w_) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("class weights must be positive and finite");
    }
  }
}

ClassWeights ClassWeights::uniform(int classes) {
  return ClassWeights(std::vector<double>(classes, 1.0));
}

Tensor softmax_channels(const Tensor& scores) {
  const Shape& s = scores.shape();
  Tensor out(s);
  const std::size_t plane = s.plane_size();
  for (int n = 0; n < s.n; ++n) {
    const double* f = scores.sample(n).data();
    double* p = out.sample(n).data();
    for (std::size_t q = 0; q < plane; ++q) {
      double mx = f[q];
      for (int k = 1; k < s.c; ++k) mx = std::max(mx, f[k * plane + q]);
      double z = 0.0;
      for (int k = 0; k < s.c; ++k) {
        const double e = std::exp(f[k * plane + q] - mx);
        p[k * plane + q] = e;
        z += e;
      }
      for (int k = 0; k < s.c; ++k) p[k * plane + q] /= z;
    }
  }
  return out;
}

LossResult weighted_softmax_loss(const Tensor& scores,
                                 std::span<const int> labels,
                                 const ClassWeights& weights) {
  const Shape& s = scores.shape();
  const std::size_t plane = s.plane_size();
  const std::size_t m = static_cast<std::size_t>(s.n) * plane;
  if (m == 0) throw std::invalid_argument("empty batch");
  if (labels.size() != m) {
    throw std::invalid_argument("expected " + std::to_string(m) +
                                " labels, got " +
                                std::to_string(labels.size()));
  }
  if (weights.classes() != s.c) {
    throw std::invalid_argument("scores have " + std::to_string(s.c) +
                                " classes but weights have " +
                                std::to_string(weights.classes()));
  }
  if (!scores.all_finite()) throw std::invalid_argument("non-finite scores");

  LossResult r;
  r.grad = softmax_channels(scores);
  const double inv_m = 1.0 / static_cast<double>(m);
  double total = 0.0;
  for (int n = 0; n < s.n; ++n) {
    const double* f = scores.sample(n).data();
    double* g = r.grad.sample(n).data();
    for (std::size_t q = 0; q < plane; ++q) {
      const int y = labels[n * plane + q];
      if (y < 0 || y >= s.c) {
        throw std::invalid_argument("label " + std::to_string(y) +
                                    " outside [0, " + std::to_string(s.c) +
                                    ")");
      }
      double mx = f[q];
      for (int k = 1; k < s.c; ++k) mx = std::max(mx, f[k * plane + q]);
      double z = 0.0;
      for (int k = 0; k < s.c; ++k) z += std::exp(f[k * plane + q] - mx);
      const double nll = std::log(z) - (f[y * plane + q] - mx);
      const double w = weights[y];
      total += w * nll;
      g[y * plane + q] -= 1.0;
      for (int k = 0; k < s.c; ++k) g[k * plane + q] *= w * inv_m;
    }
  }
  r.loss = total * inv_m;
  return r;
}

}  // namespace dermkit
