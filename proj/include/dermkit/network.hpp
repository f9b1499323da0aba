#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "dermkit/tensor.hpp"

namespace dermkit {

enum class LayerKind {
  conv,
  batch_norm,
  relu,
  max_pool,
  avg_pool,
  dense,
  upsample_bilinear,
  residual_add,
};

std::string_view to_string(LayerKind kind);

// One node of a sequential layer graph. Each layer consumes the output of
// the layer before it; residual_add additionally consumes the output of
// `skip_from` (-1 names the network input).
struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  int out_channels = 0;  // conv, dense
  int kernel_h = 1;      // conv kernel or pooling window
  int kernel_w = 1;
  int stride = 1;
  int padding = 0;
  bool global = false;   // avg_pool over the full feature map
  int scale = 0;         // upsample factor; 0 restores the network input size
  int skip_from = -1;    // residual_add source layer

  static LayerSpec conv(int out_channels, int kernel, int stride = 1);
  static LayerSpec batch_norm();
  static LayerSpec relu();
  static LayerSpec max_pool(int window, int stride);
  static LayerSpec avg_pool(int window, int stride);
  static LayerSpec global_avg_pool();
  static LayerSpec dense(int out_features);
  static LayerSpec upsample(int scale);
  static LayerSpec upsample_to_input();
  static LayerSpec residual_add(int skip_from);

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

enum class OutputKind { per_image, per_pixel };

struct NetworkSpec {
  int in_channels = 3;
  // 0 means any size (fully convolutional).
  int in_height = 0;
  int in_width = 0;
  OutputKind output = OutputKind::per_image;
  std::vector<LayerSpec> layers;

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

// Propagates `input` through the graph. Element i of the result is the output
// shape of layer i. Throws ShapeError naming the first inconsistent layer.
std::vector<Shape> infer_shapes(const NetworkSpec& net, const Shape& input);

// Validates the input against the network's declared input contract.
void check_input(const NetworkSpec& net, const Shape& input);

// Human-readable declarative text form; parse_network(to_text(n)) == n.
std::string to_text(const NetworkSpec& net);
NetworkSpec parse_network(std::string_view text);

std::size_t parameter_count(const NetworkSpec& net);

}  // namespace dermkit
