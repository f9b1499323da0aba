#include <cmath>
#include <random>

#include "doctest.h"
#include "dermkit/engine.hpp"
#include "dermkit/error.hpp"
#include "dermkit/gradcheck.hpp"
#include "dermkit/loss.hpp"
#include "dermkit/network.hpp"
#include "dermkit/optimizer.hpp"
#include "dermkit/parameters.hpp"

using namespace dermkit;

namespace {

Tensor random_tensor(Shape s, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  Tensor t(s);
  for (double& v : t.values()) v = nd(rng);
  return t;
}

std::vector<int> random_labels(std::size_t n, int k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<int> l(n);
  for (int& v : l) v = static_cast<int>(rng() % k);
  return l;
}

NetworkSpec image_net(std::vector<LayerSpec> body, int classes, int c = 3, int side = 8) {
  NetworkSpec net;
  net.in_channels = c;
  net.in_height = side;
  net.in_width = side;
  net.layers = std::move(body);
  net.layers.push_back(LayerSpec::dense(classes));
  return net;
}

}  // namespace

TEST_CASE("identity 1x1 conv passes input through") {
  NetworkSpec net;
  net.in_channels = 3;
  net.output = OutputKind::per_pixel;
  net.layers = {LayerSpec::conv(3, 1)};
  Parameters p = init_parameters(net, 1);
  p.layers[0].weight.fill(0.0);
  for (int c = 0; c < 3; ++c) p.layers[0].weight.at(c, c, 0, 0) = 1.0;
  p.layers[0].bias.fill(0.0);
  const Tensor x = random_tensor({2, 3, 5, 7}, 3);
  CHECK(predict(net, p, x) == x);
}

TEST_CASE("relu zeroes negatives") {
  NetworkSpec net;
  net.in_channels = 1;
  net.output = OutputKind::per_pixel;
  net.layers = {LayerSpec::relu()};
  const Tensor out = predict(net, init_parameters(net, 0), Tensor({1, 1, 3, 3}, -1.0));
  for (double v : out.values()) CHECK(v == 0.0);
}

TEST_CASE("2x2 max pool on 1..16") {
  NetworkSpec net;
  net.in_channels = 1;
  net.output = OutputKind::per_pixel;
  net.layers = {LayerSpec::max_pool(2, 2)};
  Tensor x({1, 1, 4, 4});
  for (int i = 0; i < 16; ++i) x[i] = i + 1;
  const Tensor out = predict(net, init_parameters(net, 0), x);
  REQUIRE(out.shape() == Shape{1, 1, 2, 2});
  CHECK(out[0] == 6);
  CHECK(out[1] == 8);
  CHECK(out[2] == 14);
  CHECK(out[3] == 16);
}

TEST_CASE("shape errors name the layer") {
  NetworkSpec net;
  net.in_channels = 3;
  net.output = OutputKind::per_pixel;
  net.layers = {LayerSpec::conv(4, 3), LayerSpec::max_pool(2, 2), LayerSpec::max_pool(2, 2)};
  try {
    infer_shapes(net, {1, 3, 2, 2});
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    CHECK(e.layer() == 2);
  }
  CHECK_THROWS_AS(check_input(net, {1, 2, 8, 8}), ShapeError);
}

TEST_CASE("non-finite activations are reported") {
  NetworkSpec net;
  net.in_channels = 1;
  net.output = OutputKind::per_pixel;
  net.layers = {LayerSpec::conv(1, 1)};
  Parameters p = init_parameters(net, 0);
  p.layers[0].weight.fill(1e308);
  CHECK_THROWS_AS(predict(net, p, Tensor({1, 1, 2, 2}, 10.0)), NonFiniteError);
}

TEST_CASE("softmax loss values") {
  const ClassWeights uni = ClassWeights::uniform(2);
  const std::vector<int> y0{0};
  CHECK(weighted_softmax_loss(Tensor({1, 2, 1, 1}, 0.0), y0, uni).loss ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
  const Tensor f({1, 2, 1, 1}, {std::log(3.0), 0.0});
  const double plain = weighted_softmax_loss(f, y0, uni).loss;
  CHECK(plain == doctest::Approx(-std::log(0.75)).epsilon(1e-12));
  const double weighted = weighted_softmax_loss(f, y0, ClassWeights({5.0, 1.0})).loss;
  CHECK(weighted == doctest::Approx(5.0 * plain).epsilon(1e-14));
}

TEST_CASE("unit weights reproduce the unweighted loss exactly") {
  const Tensor f = random_tensor({4, 5, 3, 3}, 7);
  const auto y = random_labels(36, 5, 8);
  const LossResult a = weighted_softmax_loss(f, y, ClassWeights::uniform(5));
  // Direct evaluation of the mean negative log-softmax.
  double direct = 0.0;
  for (int n = 0; n < 4; ++n) {
    for (int p = 0; p < 9; ++p) {
      double mx = -1e300;
      for (int k = 0; k < 5; ++k) mx = std::max(mx, f.at(n, k, p / 3, p % 3));
      double z = 0.0;
      for (int k = 0; k < 5; ++k) z += std::exp(f.at(n, k, p / 3, p % 3) - mx);
      const int label = y[n * 9 + p];
      direct += -(f.at(n, label, p / 3, p % 3) - mx - std::log(z));
    }
  }
  CHECK(a.loss == doctest::Approx(direct / 36).epsilon(1e-12));
  // Gradient sums to zero over classes at every sample.
  for (int n = 0; n < 4; ++n) {
    for (int p = 0; p < 9; ++p) {
      double s = 0.0;
      for (int k = 0; k < 5; ++k) s += a.grad.at(n, k, p / 3, p % 3);
      CHECK(std::abs(s) < 1e-15);
    }
  }
}

TEST_CASE("zero upstream gradient gives zero parameter gradients") {
  const NetworkSpec net = image_net(
      {LayerSpec::conv(4, 3), LayerSpec::batch_norm(), LayerSpec::relu(), LayerSpec::max_pool(2, 2)}, 3);
  const Parameters p = init_parameters(net, 2);
  const Tensor x = random_tensor({2, 3, 8, 8}, 4);
  const ForwardCache c = forward(net, p, x, Mode::train);
  const Parameters g = backward(net, p, c, Tensor(c.output().shape()));
  g.for_each_trainable([](const Tensor& t) {
    for (double v : t.values()) CHECK(v == 0.0);
  });
}

TEST_CASE("dense gradient of sum of outputs is the input") {
  NetworkSpec net;
  net.in_channels = 4;
  net.in_height = 1;
  net.in_width = 1;
  net.layers = {LayerSpec::dense(3)};
  const Parameters p = init_parameters(net, 1);
  const Tensor x({1, 4, 1, 1}, {0.5, -1.0, 2.0, 3.0});
  const ForwardCache c = forward(net, p, x, Mode::train);
  const Parameters g = backward(net, p, c, Tensor(c.output().shape(), 1.0));
  for (int o = 0; o < 3; ++o) {
    for (int i = 0; i < 4; ++i) CHECK(g.layers[0].weight.at(o, i, 0, 0) == x[i]);
    CHECK(g.layers[0].bias[o] == 1.0);
  }
}

TEST_CASE("gradient check: linear layer is exact to rounding") {
  NetworkSpec net;
  net.in_channels = 6;
  net.in_height = 1;
  net.in_width = 1;
  net.layers = {LayerSpec::dense(4)};
  const Parameters p = init_parameters(net, 3);
  const Tensor x = random_tensor({8, 6, 1, 1}, 5);
  GradCheckOptions o;
  o.samples_per_tensor = 100;
  CHECK(finite_diff_grad_check(net, p, x, random_labels(8, 4, 6), ClassWeights::uniform(4), o) <
        1e-6);
  o.eps = 0.0;
  CHECK_THROWS(finite_diff_grad_check(net, p, x, random_labels(8, 4, 6),
                                      ClassWeights::uniform(4), o));
}

TEST_CASE("gradient check skips entries straddling a relu kink") {
  // One unit whose pre-activation sits 3e-6 above zero: moving the conv
  // weight or bias by 1e-5 either way crosses the kink.
  NetworkSpec net;
  net.in_channels = 1;
  net.in_height = 1;
  net.in_width = 1;
  net.layers = {LayerSpec::conv(1, 1), LayerSpec::relu(), LayerSpec::dense(2)};
  Parameters p = init_parameters(net, 1);
  p.layers[0].weight[0] = 1.0;
  p.layers[0].bias[0] = -1.0 + 3e-6;
  p.layers[2].weight.fill(0.0);
  p.layers[2].weight[0] = 1.0;
  const Tensor x({1, 1, 1, 1}, 1.0);
  const std::vector<int> labels{0};
  GradCheckOptions o;
  o.skip_kinks = false;
  CHECK(finite_diff_grad_check(net, p, x, labels, ClassWeights::uniform(2), o) > 0.1);
  o.skip_kinks = true;
  const GradCheckReport r = grad_check(net, p, x, labels, ClassWeights::uniform(2), o);
  CHECK(r.skipped_kinks == 2);
  CHECK(r.unchecked_tensors == 2);
  CHECK(r.checked == 4);  // the dense layer: 2 weights, 2 biases
  CHECK(r.max_rel_error < 1e-6);
}

TEST_CASE("gradient check: every layer kind") {
  const Tensor x = random_tensor({4, 3, 8, 8}, 11);
  const auto labels = random_labels(4, 3, 12);
  const ClassWeights w({1.0, 2.0, 3.0});
  struct Case {
    std::string name;
    std::vector<LayerSpec> layers;
  };
  const std::vector<Case> cases = {
      {"conv", {LayerSpec::conv(4, 3)}},
      {"strided conv", {LayerSpec::conv(4, 3, 2)}},
      {"batch norm", {LayerSpec::conv(4, 3), LayerSpec::batch_norm()}},
      {"relu", {LayerSpec::conv(4, 3), LayerSpec::relu()}},
      {"max pool", {LayerSpec::conv(4, 3), LayerSpec::max_pool(2, 2)}},
      {"avg pool", {LayerSpec::conv(4, 3), LayerSpec::avg_pool(2, 2)}},
      {"global pool", {LayerSpec::conv(4, 3), LayerSpec::global_avg_pool()}},
      {"upsample", {LayerSpec::conv(4, 3, 2), LayerSpec::upsample(2)}},
      {"residual", {LayerSpec::conv(3, 3), LayerSpec::relu(), LayerSpec::conv(3, 3),
                    LayerSpec::residual_add(-1)}},
  };
  for (const auto& c : cases) {
    CAPTURE(c.name);
    const NetworkSpec net = image_net(c.layers, 3);
    const Parameters p = init_parameters(net, 21);
    GradCheckOptions o;
    o.samples_per_tensor = 20;
    CHECK(finite_diff_grad_check(net, p, x, labels, w, o) < 1e-4);
  }
}

TEST_CASE("forward shapes match inference on random networks") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 60; ++trial) {
    NetworkSpec net;
    net.in_channels = 1 + static_cast<int>(rng() % 3);
    net.output = OutputKind::per_pixel;
    int side = 8 + static_cast<int>(rng() % 9);
    const int depth = 1 + static_cast<int>(rng() % 5);
    for (int d = 0; d < depth; ++d) {
      switch (rng() % 6) {
        case 0: net.layers.push_back(LayerSpec::conv(1 + rng() % 4, rng() % 2 ? 3 : 1, 1 + rng() % 2)); break;
        case 1: net.layers.push_back(LayerSpec::batch_norm()); break;
        case 2: net.layers.push_back(LayerSpec::relu()); break;
        case 3: net.layers.push_back(LayerSpec::max_pool(2, 2)); break;
        case 4: net.layers.push_back(LayerSpec::avg_pool(2, 1)); break;
        default: net.layers.push_back(LayerSpec::upsample(2)); break;
      }
    }
    const Shape in{2, net.in_channels, side, side + 1};
    std::vector<Shape> shapes;
    try {
      shapes = infer_shapes(net, in);
    } catch (const ShapeError&) {
      continue;
    }
    const ForwardCache c = forward(net, init_parameters(net, trial), random_tensor(in, trial), Mode::train);
    CHECK(c.output().shape() == shapes.back());
  }
}

TEST_CASE("eval forward is deterministic and text form round-trips") {
  const NetworkSpec net = image_net(
      {LayerSpec::conv(4, 3), LayerSpec::batch_norm(), LayerSpec::relu(), LayerSpec::global_avg_pool()}, 2);
  const Parameters p = init_parameters(net, 5);
  const Tensor x = random_tensor({3, 3, 8, 8}, 6);
  CHECK(predict(net, p, x) == predict(net, p, x));
  CHECK(forward(net, p, x, Mode::eval).output() == predict(net, p, x));
  CHECK(parse_network(to_text(net)) == net);
}

TEST_CASE("sgd update rule") {
  NetworkSpec net;
  net.in_channels = 1;
  net.in_height = 1;
  net.in_width = 1;
  net.layers = {LayerSpec::dense(1)};
  Parameters p = init_parameters(net, 0);
  p.layers[0].weight.fill(0.0);
  Parameters g = zeros_like(p);
  g.layers[0].weight.fill(1.0);

  SUBCASE("plain step") {
    OptimizerState s = make_optimizer(p, {0.01, 0.0, 0.1, 0, 0.0}, 10);
    sgd_update(p, g, s);
    CHECK(p.layers[0].weight[0] == doctest::Approx(-0.01).epsilon(1e-15));
  }
  SUBCASE("momentum, two steps") {
    OptimizerState s = make_optimizer(p, {0.01, 0.9, 0.1, 0, 0.0}, 10);
    sgd_update(p, g, s);
    sgd_update(p, g, s);
    CHECK(p.layers[0].weight[0] == doctest::Approx(-0.029).epsilon(1e-14));
  }
  SUBCASE("decay") {
    OptimizerState s = make_optimizer(p, {0.01, 0.9, 0.1, 0, 0.0}, 10);
    CHECK(s.decay_every == 5);
    for (int e = 0; e < 4; ++e) end_epoch(s);
    CHECK(s.learning_rate == 0.01);
    end_epoch(s);
    CHECK(s.learning_rate == doctest::Approx(0.001).epsilon(1e-15));
  }
  SUBCASE("zero gradient is a fixed point") {
    p.layers[0].weight.fill(0.7);
    OptimizerState s = make_optimizer(p, {0.01, 0.9, 0.1, 0, 0.0}, 10);
    const Parameters before = p;
    sgd_update(p, zeros_like(p), s);
    CHECK(p == before);
  }
}
