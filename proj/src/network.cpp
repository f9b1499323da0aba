#include "dermkit/network.hpp"

#include <charconv>
#include <map>
#include <sstream>
#include <stdexcept>

#include "dermkit/error.hpp"

namespace dermkit {

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::conv: return "conv";
    case LayerKind::batch_norm: return "batch_norm";
    case LayerKind::relu: return "relu";
    case LayerKind::max_pool: return "max_pool";
    case LayerKind::avg_pool: return "avg_pool";
    case LayerKind::dense: return "dense";
    case LayerKind::upsample_bilinear: return "upsample";
    case LayerKind::residual_add: return "residual_add";
  }
  return "?";
}

LayerSpec LayerSpec::conv(int out_channels, int kernel, int stride) {
  LayerSpec s;
  s.kind = LayerKind::conv;
  s.out_channels = out_channels;
  s.kernel_h = s.kernel_w = kernel;
  s.stride = stride;
  s.padding = kernel / 2;
  return s;
}

LayerSpec LayerSpec::batch_norm() {
  LayerSpec s;
  s.kind = LayerKind::batch_norm;
  return s;
}

LayerSpec LayerSpec::relu() { return LayerSpec{}; }

LayerSpec LayerSpec::max_pool(int window, int stride) {
  LayerSpec s;
  s.kind = LayerKind::max_pool;
  s.kernel_h = s.kernel_w = window;
  s.stride = stride;
  return s;
}

LayerSpec LayerSpec::avg_pool(int window, int stride) {
  LayerSpec s = max_pool(window, stride);
  s.kind = LayerKind::avg_pool;
  return s;
}

LayerSpec LayerSpec::global_avg_pool() {
  LayerSpec s;
  s.kind = LayerKind::avg_pool;
  s.global = true;
  return s;
}

LayerSpec LayerSpec::dense(int out_features) {
  LayerSpec s;
  s.kind = LayerKind::dense;
  s.out_channels = out_features;
  return s;
}

LayerSpec LayerSpec::upsample(int scale) {
  LayerSpec s;
  s.kind = LayerKind::upsample_bilinear;
  s.scale = scale;
  return s;
}

LayerSpec LayerSpec::upsample_to_input() { return upsample(0); }

LayerSpec LayerSpec::residual_add(int skip_from) {
  LayerSpec s;
  s.kind = LayerKind::residual_add;
  s.skip_from = skip_from;
  return s;
}

void check_input(const NetworkSpec& net, const Shape& input) {
  if (input.n < 1) throw ShapeError(-1, "empty batch");
  if (input.c != net.in_channels) {
    throw ShapeError(-1, "expected " + std::to_string(net.in_channels) +
                             " input channels, got " + input.str());
  }
  if ((net.in_height && input.h != net.in_height) ||
      (net.in_width && input.w != net.in_width)) {
    throw ShapeError(-1, "expected input " + std::to_string(net.in_height) +
                             "x" + std::to_string(net.in_width) + ", got " +
                             input.str());
  }
  if (input.h < 1 || input.w < 1) throw ShapeError(-1, "empty input plane");
}

std::vector<Shape> infer_shapes(const NetworkSpec& net, const Shape& input) {
  check_input(net, input);
  std::vector<Shape> shapes;
  shapes.reserve(net.layers.size());
  Shape cur = input;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const LayerSpec& l = net.layers[i];
    const int id = static_cast<int>(i);
    Shape out = cur;
    switch (l.kind) {
      case LayerKind::conv: {
        if (l.out_channels < 1 || l.kernel_h < 1 || l.kernel_w < 1 ||
            l.stride < 1 || l.padding < 0) {
          throw ShapeError(id, "invalid conv parameters");
        }
        const int oh = (cur.h + 2 * l.padding - l.kernel_h) / l.stride + 1;
        const int ow = (cur.w + 2 * l.padding - l.kernel_w) / l.stride + 1;
        if (cur.h + 2 * l.padding < l.kernel_h ||
            cur.w + 2 * l.padding < l.kernel_w) {
          throw ShapeError(id, "conv kernel larger than input " + cur.str());
        }
        out = {cur.n, l.out_channels, oh, ow};
        break;
      }
      case LayerKind::batch_norm:
      case LayerKind::relu:
        break;
      case LayerKind::max_pool:
      case LayerKind::avg_pool: {
        if (l.global) {
          out = {cur.n, cur.c, 1, 1};
          break;
        }
        if (l.kernel_h < 1 || l.kernel_w < 1 || l.stride < 1) {
          throw ShapeError(id, "invalid pooling parameters");
        }
        if (cur.h < l.kernel_h || cur.w < l.kernel_w) {
          throw ShapeError(id, "pooling window larger than input " + cur.str());
        }
        out = {cur.n, cur.c, (cur.h - l.kernel_h) / l.stride + 1,
               (cur.w - l.kernel_w) / l.stride + 1};
        break;
      }
      case LayerKind::dense:
        if (l.out_channels < 1) throw ShapeError(id, "dense needs outputs");
        out = {cur.n, l.out_channels, 1, 1};
        break;
      case LayerKind::upsample_bilinear:
        if (l.scale < 0) throw ShapeError(id, "negative upsample scale");
        if (l.scale == 0) {
          out = {cur.n, cur.c, input.h, input.w};
        } else {
          out = {cur.n, cur.c, cur.h * l.scale, cur.w * l.scale};
        }
        break;
      case LayerKind::residual_add: {
        if (l.skip_from >= id || l.skip_from < -1) {
          throw ShapeError(id, "residual source " +
                                   std::to_string(l.skip_from) +
                                   " is not an earlier layer");
        }
        const Shape& skip = l.skip_from < 0 ? input : shapes[l.skip_from];
        if (!(skip == cur)) {
          throw ShapeError(id, "residual source shape " + skip.str() +
                                   " differs from " + cur.str());
        }
        break;
      }
    }
    shapes.push_back(out);
    cur = out;
  }
  return shapes;
}

namespace {

void expect_positive_shape(const NetworkSpec& net) {
  if (net.in_channels < 1) throw ShapeError(-1, "network needs input channels");
}

}  // namespace

std::size_t parameter_count(const NetworkSpec& net) {
  expect_positive_shape(net);
  std::size_t total = 0;
  int channels = net.in_channels;
  std::vector<Shape> shapes;
  bool has_dense = false;
  for (const auto& l : net.layers) has_dense |= l.kind == LayerKind::dense;
  if (has_dense) {
    if (!net.in_height || !net.in_width) {
      throw ShapeError(-1, "dense layer requires a fixed input size");
    }
    shapes = infer_shapes(net, {1, net.in_channels, net.in_height, net.in_width});
  }
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const LayerSpec& l = net.layers[i];
    switch (l.kind) {
      case LayerKind::conv:
        total += static_cast<std::size_t>(l.out_channels) * channels *
                     l.kernel_h * l.kernel_w +
                 l.out_channels;
        channels = l.out_channels;
        break;
      case LayerKind::batch_norm:
        total += 2 * static_cast<std::size_t>(channels);
        break;
      case LayerKind::dense: {
        const Shape& in = i == 0 ? Shape{1, net.in_channels, net.in_height,
                                         net.in_width}
                                 : shapes[i - 1];
        total += static_cast<std::size_t>(l.out_channels) * in.sample_size() +
                 l.out_channels;
        channels = l.out_channels;
        break;
      }
      default:
        break;
    }
  }
  return total;
}

std::string to_text(const NetworkSpec& net) {
  std::ostringstream os;
  os << "dermkit-network 1\n";
  os << "input channels=" << net.in_channels << " height=" << net.in_height
     << " width=" << net.in_width << "\n";
  os << "output "
     << (net.output == OutputKind::per_pixel ? "per_pixel" : "per_image")
     << "\n";
  for (const auto& l : net.layers) {
    os << to_string(l.kind);
    switch (l.kind) {
      case LayerKind::conv:
        os << " out=" << l.out_channels << " kernel=" << l.kernel_h << "x"
           << l.kernel_w << " stride=" << l.stride << " pad=" << l.padding;
        break;
      case LayerKind::max_pool:
      case LayerKind::avg_pool:
        if (l.global) {
          os << " global";
        } else {
          os << " window=" << l.kernel_h << "x" << l.kernel_w
             << " stride=" << l.stride;
        }
        break;
      case LayerKind::dense:
        os << " out=" << l.out_channels;
        break;
      case LayerKind::upsample_bilinear:
        if (l.scale == 0) {
          os << " to_input";
        } else {
          os << " scale=" << l.scale;
        }
        break;
      case LayerKind::residual_add:
        os << " from=" << l.skip_from;
        break;
      default:
        break;
    }
    os << "\n";
  }
  return os.str();
}

namespace {

int parse_int(std::string_view s, int line) {
  int v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw FormatError("network line " + std::to_string(line) +
                      ": bad integer '" + std::string(s) + "'");
  }
  return v;
}

// "3x3" -> (3, 3)
std::pair<int, int> parse_pair(std::string_view s, int line) {
  const auto x = s.find('x');
  if (x == std::string_view::npos) {
    throw FormatError("network line " + std::to_string(line) +
                      ": expected HxW, got '" + std::string(s) + "'");
  }
  return {parse_int(s.substr(0, x), line), parse_int(s.substr(x + 1), line)};
}

}  // namespace

NetworkSpec parse_network(std::string_view text) {
  NetworkSpec net;
  std::istringstream is{std::string(text)};
  std::string line;
  int lineno = 0;
  bool header = false;
  while (std::getline(is, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string word;
    if (!(ls >> word) || word[0] == '#') continue;
    std::map<std::string, std::string> kv;
    std::vector<std::string> flags;
    std::string tok;
    while (ls >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) {
        flags.push_back(tok);
      } else {
        kv[tok.substr(0, eq)] = tok.substr(eq + 1);
      }
    }
    auto get = [&](const std::string& key) -> const std::string& {
      auto it = kv.find(key);
      if (it == kv.end()) {
        throw FormatError("network line " + std::to_string(lineno) +
                          ": missing '" + key + "'");
      }
      return it->second;
    };
    auto has_flag = [&](const char* f) {
      for (const auto& x : flags) {
        if (x == f) return true;
      }
      return false;
    };
    if (word == "dermkit-network") {
      if (flags.empty() || flags[0] != "1") {
        throw FormatError("unsupported network text version");
      }
      header = true;
    } else if (word == "input") {
      net.in_channels = parse_int(get("channels"), lineno);
      net.in_height = parse_int(get("height"), lineno);
      net.in_width = parse_int(get("width"), lineno);
    } else if (word == "output") {
      if (has_flag("per_pixel")) {
        net.output = OutputKind::per_pixel;
      } else if (has_flag("per_image")) {
        net.output = OutputKind::per_image;
      } else {
        throw FormatError("network line " + std::to_string(lineno) +
                          ": unknown output kind");
      }
    } else if (word == "conv") {
      LayerSpec l;
      l.kind = LayerKind::conv;
      l.out_channels = parse_int(get("out"), lineno);
      std::tie(l.kernel_h, l.kernel_w) = parse_pair(get("kernel"), lineno);
      l.stride = parse_int(get("stride"), lineno);
      l.padding = parse_int(get("pad"), lineno);
      net.layers.push_back(l);
    } else if (word == "batch_norm") {
      net.layers.push_back(LayerSpec::batch_norm());
    } else if (word == "relu") {
      net.layers.push_back(LayerSpec::relu());
    } else if (word == "max_pool" || word == "avg_pool") {
      LayerSpec l;
      l.kind = word == "max_pool" ? LayerKind::max_pool : LayerKind::avg_pool;
      if (has_flag("global")) {
        l.global = true;
      } else {
        std::tie(l.kernel_h, l.kernel_w) = parse_pair(get("window"), lineno);
        l.stride = parse_int(get("stride"), lineno);
      }
      net.layers.push_back(l);
    } else if (word == "dense") {
      net.layers.push_back(LayerSpec::dense(parse_int(get("out"), lineno)));
    } else if (word == "upsample") {
      net.layers.push_back(has_flag("to_input")
                               ? LayerSpec::upsample_to_input()
                               : LayerSpec::upsample(
                                     parse_int(get("scale"), lineno)));
    } else if (word == "residual_add") {
      net.layers.push_back(
          LayerSpec::residual_add(parse_int(get("from"), lineno)));
    } else {
      throw FormatError("network line " + std::to_string(lineno) +
                        ": unknown layer '" + word + "'");
    }
  }
  if (!header) throw FormatError("missing dermkit-network header");
  return net;
}

}  // namespace dermkit
