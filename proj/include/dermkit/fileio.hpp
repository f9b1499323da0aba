#pragma once

#include <filesystem>
#include <string>

namespace dermkit {

std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temporary file, then renames over `path`, so readers
// never observe a partially written file.
void write_file_atomic(const std::filesystem::path& path,
                       const std::string& bytes);

}  // namespace dermkit
