#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dermkit/image.hpp"

namespace dermkit::cli {

namespace fs = std::filesystem;

enum ExitCode : int {
  kOk = 0,
  kFailed = 1,        // a stage failed while running
  kInvalidConfig = 2, // validation rejected the configuration
};

// Error attributed to a named pipeline stage ("train.lfn", "evaluate.task1").
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what, int code = kFailed)
      : std::runtime_error(what), stage_(std::move(stage)), code_(code) {}
  const std::string& stage() const { return stage_; }
  int code() const { return code_; }

 private:
  std::string stage_;
  int code_;
};

// Collects every configuration problem; nothing is written until check()
// passes.
class Validator {
 public:
  explicit Validator(std::string stage) : stage_(std::move(stage)) {}

  void fail(std::string problem) { problems_.push_back(std::move(problem)); }
  bool require(bool ok, std::string problem);
  // Checks both that the option was given and that the path exists.
  bool existing_file(const fs::path& p, std::string_view option);
  bool existing_dir(const fs::path& p, std::string_view option);
  bool given(const fs::path& p, std::string_view option);

  // Throws StageError(kInvalidConfig) listing all problems.
  void check() const;

 private:
  std::string stage_;
  std::vector<std::string> problems_;
};

// Derives the seed of a named stage from the single configuration seed.
std::uint64_t substream(std::uint64_t seed, std::string_view name);

// Relative output paths are taken under the output root (DERMKIT_OUTPUT_ROOT
// or --output-root) when one is set.
fs::path resolve_output(const fs::path& out, const fs::path& root);

// Images of a directory (.png, .jpg, .jpeg) keyed by file stem.
std::map<std::string, fs::path> list_images(const fs::path& dir);

// <id>_segmentation.png, else <id>.png; empty if neither exists.
fs::path find_mask(const fs::path& dir, const std::string& id);

// Output directory whose files are written temp-then-rename and recorded
// in <stage>.manifest.json by finish().
class OutputSet {
 public:
  OutputSet(fs::path dir, std::string stage);

  const fs::path& dir() const { return dir_; }
  void write(const std::string& relative, const std::string& bytes);
  void write_png(const std::string& relative, const Image& img);
  void write_mask(const std::string& relative, const BinaryMask& mask);
  void finish();

 private:
  fs::path dir_;
  std::string stage_;
  std::map<std::string, std::string> digests_;  // relative path -> sha256
  std::map<std::string, std::size_t> sizes_;
};

std::string sha256_hex(const std::string& bytes);

}  // namespace dermkit::cli
