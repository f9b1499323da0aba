#include "pipeline.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cctype>

#include "dermkit/fileio.hpp"
#include "dermkit/image_io.hpp"
#include "json.hpp"

namespace dermkit::cli {

bool Validator::require(bool ok, std::string problem) {
  if (!ok) fail(std::move(problem));
  return ok;
}

bool Validator::given(const fs::path& p, std::string_view option) {
  return require(!p.empty(), std::string(option) + " is required");
}

bool Validator::existing_file(const fs::path& p, std::string_view option) {
  if (!given(p, option)) return false;
  return require(fs::is_regular_file(p),
                 std::string(option) + ": no such file '" + p.string() + "'");
}

bool Validator::existing_dir(const fs::path& p, std::string_view option) {
  if (!given(p, option)) return false;
  return require(fs::is_directory(p),
                 std::string(option) + ": no such directory '" + p.string() + "'");
}

void Validator::check() const {
  if (problems_.empty()) return;
  std::string msg = std::to_string(problems_.size()) + " configuration error(s)";
  for (const auto& p : problems_) msg += "\n  - " + p;
  throw StageError(stage_, msg, kInvalidConfig);
}

std::uint64_t substream(std::uint64_t seed, std::string_view name) {
  // FNV-1a over the name, folded into the seed with a splitmix64 finalizer.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (h | 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

fs::path resolve_output(const fs::path& out, const fs::path& root) {
  if (out.empty() || out.is_absolute() || root.empty()) return out;
  return root / out;
}

std::map<std::string, fs::path> list_images(const fs::path& dir) {
  std::map<std::string, fs::path> images;
  if (!fs::is_directory(dir)) return images;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (ext != ".png" && ext != ".jpg" && ext != ".jpeg") continue;
    images.emplace(entry.path().stem().string(), entry.path());
  }
  return images;
}

fs::path find_mask(const fs::path& dir, const std::string& id) {
  for (const auto& name : {id + "_segmentation.png", id + ".png"}) {
    if (fs::is_regular_file(dir / name)) return dir / name;
  }
  return {};
}

std::string sha256_hex(const std::string& bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

OutputSet::OutputSet(fs::path dir, std::string stage)
    : dir_(std::move(dir)), stage_(std::move(stage)) {}

void OutputSet::write(const std::string& relative, const std::string& bytes) {
  write_file_atomic(dir_ / relative, bytes);
  digests_[relative] = sha256_hex(bytes);
  sizes_[relative] = bytes.size();
}

void OutputSet::write_png(const std::string& relative, const Image& img) {
  write(relative, encode_png(img));
}

void OutputSet::write_mask(const std::string& relative, const BinaryMask& mask) {
  write(relative, encode_mask_png(mask));
}

void OutputSet::finish() {
  nlohmann::ordered_json j;
  j["stage"] = stage_;
  j["files"] = nlohmann::ordered_json::array();
  for (const auto& [path, digest] : digests_) {
    j["files"].push_back({{"path", path}, {"bytes", sizes_.at(path)}, {"sha256", digest}});
  }
  write_file_atomic(dir_ / (stage_ + ".manifest.json"), j.dump(2) + "\n");
}

}  // namespace dermkit::cli
