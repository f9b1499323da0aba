#include "dermkit/parameters.hpp"

#include <cmath>
#include <random>

#include "dermkit/error.hpp"

namespace dermkit {

void Parameters::for_each_trainable(const std::function<void(Tensor&)>& fn) {
  for (auto& l : layers) {
    if (!l.weight.empty()) fn(l.weight);
    if (!l.bias.empty()) fn(l.bias);
  }
}

void Parameters::for_each_trainable(
    const std::function<void(const Tensor&)>& fn) const {
  for (const auto& l : layers) {
    if (!l.weight.empty()) fn(l.weight);
    if (!l.bias.empty()) fn(l.bias);
  }
}

std::size_t Parameters::trainable_count() const {
  std::size_t n = 0;
  for_each_trainable([&](const Tensor& t) { n += t.size(); });
  return n;
}

namespace {

// Expected parameter shapes of each layer, derived from the graph alone.
std::vector<LayerParams> expected_layout(const NetworkSpec& net) {
  std::vector<Shape> shapes;
  for (const auto& l : net.layers) {
    if (l.kind == LayerKind::dense) {
      if (!net.in_height || !net.in_width) {
        throw ShapeError(-1, "dense layer requires a fixed input size");
      }
      shapes =
          infer_shapes(net, {1, net.in_channels, net.in_height, net.in_width});
      break;
    }
  }
  std::vector<LayerParams> out(net.layers.size());
  int channels = net.in_channels;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const LayerSpec& l = net.layers[i];
    LayerParams& p = out[i];
    switch (l.kind) {
      case LayerKind::conv:
        p.weight = Tensor({l.out_channels, channels, l.kernel_h, l.kernel_w});
        p.bias = Tensor({1, l.out_channels, 1, 1});
        channels = l.out_channels;
        break;
      case LayerKind::batch_norm:
        p.weight = Tensor({1, channels, 1, 1}, 1.0);
        p.bias = Tensor({1, channels, 1, 1});
        p.running_mean = Tensor({1, channels, 1, 1});
        p.running_var = Tensor({1, channels, 1, 1}, 1.0);
        break;
      case LayerKind::dense: {
        const int fan_in =
            static_cast<int>(i == 0 ? static_cast<std::size_t>(
                                          net.in_channels) *
                                          net.in_height * net.in_width
                                    : shapes[i - 1].sample_size());
        p.weight = Tensor({l.out_channels, fan_in, 1, 1});
        p.bias = Tensor({1, l.out_channels, 1, 1});
        channels = l.out_channels;
        break;
      }
      default:
        break;
    }
  }
  return out;
}

}  // namespace

Parameters init_parameters(const NetworkSpec& net, std::uint64_t seed) {
  Parameters params{expected_layout(net)};
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const LayerKind kind = net.layers[i].kind;
    if (kind != LayerKind::conv && kind != LayerKind::dense) continue;
    Tensor& w = params.layers[i].weight;
    const double fan_in = static_cast<double>(w.shape().sample_size());
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
    for (double& v : w.values()) v = dist(rng);
  }
  return params;
}

Parameters zeros_like(const Parameters& params) {
  Parameters z;
  z.layers.reserve(params.layers.size());
  for (const auto& l : params.layers) {
    z.layers.push_back({Tensor(l.weight.shape()), Tensor(l.bias.shape()),
                        Tensor(l.running_mean.shape()),
                        Tensor(l.running_var.shape())});
  }
  return z;
}

void check_parameters(const NetworkSpec& net, const Parameters& params) {
  const auto expected = expected_layout(net);
  if (expected.size() != params.layers.size()) {
    throw ShapeError(-1, "parameter set has " +
                             std::to_string(params.layers.size()) +
                             " layers, network has " +
                             std::to_string(expected.size()));
  }
  for (std::size_t i = 0; i < expected.size(); ++i) {
    const auto& e = expected[i];
    const auto& p = params.layers[i];
    if (!(e.weight.shape() == p.weight.shape()) ||
        !(e.bias.shape() == p.bias.shape()) ||
        !(e.running_mean.shape() == p.running_mean.shape()) ||
        !(e.running_var.shape() == p.running_var.shape())) {
      throw ShapeError(static_cast<int>(i), "parameter shapes do not match " +
                                                std::string(to_string(
                                                    net.layers[i].kind)));
    }
  }
}

}  // namespace dermkit
