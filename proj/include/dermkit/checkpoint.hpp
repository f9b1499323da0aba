#pragma once

#include <filesystem>
#include <string>

#include "dermkit/network.hpp"
#include "dermkit/parameters.hpp"

namespace dermkit {

// Binary checkpoint container, all integers little-endian:
//
//   "DKCKPT\0\0"            8-byte magic
//   u32 version             currently 1
//   u64 manifest_len        followed by the network text (to_text)
//   u64 tensor_count
//   per tensor:
//     u32 name_len, name    e.g. "layer.3.weight"
//     u64 n, c, h, w
//     f64[n*c*h*w]          IEEE-754 binary64, little-endian
//
// Tensors appear in layer order: weight, bias, running_mean, running_var,
// empty tensors omitted.
struct Checkpoint {
  NetworkSpec net;
  Parameters params;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string encode_checkpoint(const NetworkSpec& net, const Parameters& params);
Checkpoint decode_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const NetworkSpec& net,
                     const Parameters& params);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace dermkit
