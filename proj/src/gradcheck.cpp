#include "dermkit/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "dermkit/engine.hpp"

namespace dermkit {

namespace {

struct Probe {
  double loss = 0.0;
  // relu input signs and max-pool winners, layer by layer
  std::vector<bool> pattern;
};

Probe probe_at(const NetworkSpec& net, const Parameters& params,
               const Tensor& batch, std::span<const int> labels,
               const ClassWeights& weights, bool with_pattern) {
  const auto cache = forward(net, params, batch, Mode::train);
  Probe p;
  p.loss = weighted_softmax_loss(cache.output(), labels, weights).loss;
  if (!with_pattern) return p;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    if (net.layers[i].kind == LayerKind::relu) {
      const Tensor& in = i == 0 ? cache.input : cache.outputs[i - 1];
      for (double v : in.values()) p.pattern.push_back(v > 0.0);
    } else if (net.layers[i].kind == LayerKind::max_pool) {
      for (std::int32_t a : cache.aux[i].argmax) {
        for (int b = 0; b < 32; ++b) p.pattern.push_back((a >> b) & 1);
      }
    }
  }
  return p;
}

}  // namespace

GradCheckReport grad_check(const NetworkSpec& net, const Parameters& params,
                           const Tensor& batch, std::span<const int> labels,
                           const ClassWeights& weights,
                           const GradCheckOptions& options) {
  if (!(options.eps > 0.0)) {
    throw std::invalid_argument("finite-difference eps must be positive");
  }
  const auto cache = forward(net, params, batch, Mode::train);
  const auto loss = weighted_softmax_loss(cache.output(), labels, weights);
  Parameters analytic = backward(net, params, cache, loss.grad);

  Parameters probe = params;
  std::mt19937_64 rng(options.seed);
  GradCheckReport report;
  const auto wanted = static_cast<std::size_t>(std::max(options.samples_per_tensor, 0));
  for (std::size_t i = 0; i < probe.layers.size(); ++i) {
    for (int which = 0; which < 2; ++which) {
      Tensor& t = which == 0 ? probe.layers[i].weight : probe.layers[i].bias;
      const Tensor& g =
          which == 0 ? analytic.layers[i].weight : analytic.layers[i].bias;
      if (t.empty() || wanted == 0) continue;
      std::vector<std::size_t> idx(t.size());
      std::iota(idx.begin(), idx.end(), 0);
      std::shuffle(idx.begin(), idx.end(), rng);
      // Kink replacements are drawn from at most 8x the requested entries.
      idx.resize(std::min(idx.size(), 8 * wanted));
      std::size_t done = 0;
      for (std::size_t k : idx) {
        if (done == wanted) break;
        const double saved = t[k];
        t[k] = saved + options.eps;
        const Probe up = probe_at(net, probe, batch, labels, weights, options.skip_kinks);
        t[k] = saved - options.eps;
        const Probe down = probe_at(net, probe, batch, labels, weights, options.skip_kinks);
        t[k] = saved;
        if (up.pattern != down.pattern) {
          ++report.skipped_kinks;
          continue;
        }
        const double numeric = (up.loss - down.loss) / (2.0 * options.eps);
        const double a = g[k];
        const double denom =
            std::max({std::abs(a), std::abs(numeric), options.abs_floor});
        report.max_rel_error =
            std::max(report.max_rel_error, std::abs(a - numeric) / denom);
        ++report.checked;
        ++done;
      }
      if (done == 0) ++report.unchecked_tensors;
    }
  }
  return report;
}

double finite_diff_grad_check(const NetworkSpec& net, const Parameters& params,
                              const Tensor& batch, std::span<const int> labels,
                              const ClassWeights& weights,
                              const GradCheckOptions& options) {
  return grad_check(net, params, batch, labels, weights, options).max_rel_error;
}

}  // namespace dermkit
