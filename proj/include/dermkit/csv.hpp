#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace dermkit {

// Minimal RFC-4180 table: first row is the header.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Index of a header column; throws FormatError if absent.
  std::size_t column(std::string_view name) const;
};

CsvTable parse_csv(std::string_view text);
CsvTable read_csv(const std::filesystem::path& path);
std::string format_csv(const CsvTable& table);

// Shortest decimal text that round-trips the double.
std::string format_number(double v);

}  // namespace dermkit
