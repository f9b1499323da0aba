#include "dermkit/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <map>
#include <sstream>

#include "dermkit/error.hpp"
#include "dermkit/fileio.hpp"

namespace dermkit {

namespace {

constexpr char kMagic[8] = {'D', 'K', 'C', 'K', 'P', 'T', '\0', '\0'};

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(const std::string& b) : bytes_(b) {}

  std::uint64_t u64() { return uint(8); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(uint(4)); }
  std::string str(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::uint64_t uint(int width) {
    need(width);
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i]))
           << (8 * i);
    }
    pos_ += width;
    return v;
  }
  void need(std::size_t n) {
    if (bytes_.size() - pos_ < n) throw FormatError("truncated checkpoint");
  }

  const std::string& bytes_;
  std::size_t pos_ = 0;
};

std::vector<std::pair<std::string, const Tensor*>> named_tensors(
    const Parameters& params) {
  std::vector<std::pair<std::string, const Tensor*>> out;
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    const auto& l = params.layers[i];
    const std::string prefix = "layer." + std::to_string(i) + ".";
    if (!l.weight.empty()) out.emplace_back(prefix + "weight", &l.weight);
    if (!l.bias.empty()) out.emplace_back(prefix + "bias", &l.bias);
    if (!l.running_mean.empty()) out.emplace_back(prefix + "running_mean", &l.running_mean);
    if (!l.running_var.empty()) out.emplace_back(prefix + "running_var", &l.running_var);
  }
  return out;
}

}  // namespace

std::string encode_checkpoint(const NetworkSpec& net, const Parameters& params) {
  check_parameters(net, params);
  std::string out(kMagic, sizeof(kMagic));
  put_u32(out, kCheckpointVersion);
  const std::string manifest = to_text(net);
  put_u64(out, manifest.size());
  out += manifest;
  const auto tensors = named_tensors(params);
  put_u64(out, tensors.size());
  for (const auto& [name, t] : tensors) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    const Shape& s = t->shape();
    put_u64(out, s.n);
    put_u64(out, s.c);
    put_u64(out, s.h);
    put_u64(out, s.w);
    for (double v : t->values()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  if (r.str(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) {
    throw FormatError("not a dermkit checkpoint");
  }
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ck;
  ck.net = parse_network(r.str(r.u64()));
  ck.params = init_parameters(ck.net, 0);
  std::map<std::string, Tensor*> slots;
  for (std::size_t i = 0; i < ck.params.layers.size(); ++i) {
    auto& l = ck.params.layers[i];
    const std::string prefix = "layer." + std::to_string(i) + ".";
    if (!l.weight.empty()) slots[prefix + "weight"] = &l.weight;
    if (!l.bias.empty()) slots[prefix + "bias"] = &l.bias;
    if (!l.running_mean.empty()) slots[prefix + "running_mean"] = &l.running_mean;
    if (!l.running_var.empty()) slots[prefix + "running_var"] = &l.running_var;
  }
  const std::uint64_t count = r.u64();
  if (count != slots.size()) {
    throw FormatError("checkpoint holds " + std::to_string(count) +
                      " tensors, network expects " + std::to_string(slots.size()));
  }
  for (std::uint64_t k = 0; k < count; ++k) {
    const std::string name = r.str(r.u32());
    Shape s;
    s.n = static_cast<int>(r.u64());
    s.c = static_cast<int>(r.u64());
    s.h = static_cast<int>(r.u64());
    s.w = static_cast<int>(r.u64());
    auto it = slots.find(name);
    if (it == slots.end()) throw FormatError("unexpected tensor '" + name + "'");
    if (!(it->second->shape() == s)) {
      throw FormatError("tensor '" + name + "' has shape " + s.str() +
                        ", expected " + it->second->shape().str());
    }
    for (double& v : it->second->values()) v = std::bit_cast<double>(r.u64());
    slots.erase(it);
  }
  if (!r.done()) throw FormatError("trailing bytes in checkpoint");
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const NetworkSpec& net,
                     const Parameters& params) {
  write_file_atomic(path, encode_checkpoint(net, params));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file(path));
}

}  // namespace dermkit
