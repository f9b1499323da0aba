#include "dermkit/csv.hpp"

#include <charconv>
#include <sstream>

#include "dermkit/error.hpp"
#include "dermkit/fileio.hpp"

namespace dermkit {

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw FormatError("csv: missing column '" + std::string(name) + "'");
}

CsvTable parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(ch);
      }
      continue;
    }
    switch (ch) {
      case '"':
        quoted = true;
        any = true;
        break;
      case ',':
        row.push_back(std::move(field));
        field.clear();
        any = true;
        break;
      case '\r':
        break;
      case '\n':
        if (any || !field.empty()) {
          row.push_back(std::move(field));
          records.push_back(std::move(row));
        }
        row.clear();
        field.clear();
        any = false;
        break;
      default:
        field.push_back(ch);
        any = true;
    }
  }
  if (quoted) throw FormatError("csv: unterminated quote");
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    records.push_back(std::move(row));
  }
  CsvTable t;
  if (records.empty()) return t;
  t.header = std::move(records.front());
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != t.header.size()) {
      throw FormatError("csv: row " + std::to_string(r + 1) + " has " +
                        std::to_string(records[r].size()) + " fields, expected " +
                        std::to_string(t.header.size()));
    }
    t.rows.push_back(std::move(records[r]));
  }
  return t;
}

CsvTable read_csv(const std::filesystem::path& path) {
  return parse_csv(read_file(path));
}

namespace {

void put_field(std::ostringstream& os, const std::string& f) {
  if (f.find_first_of(",\"\n\r") == std::string::npos) {
    os << f;
    return;
  }
  os << '"';
  for (char c : f) {
    if (c == '"') os << '"';
    os << c;
  }
  os << '"';
}

}  // namespace

std::string format_csv(const CsvTable& table) {
  std::ostringstream os;
  auto put_row = [&](const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) os << ',';
      put_field(os, r[i]);
    }
    os << '\n';
  };
  put_row(table.header);
  for (const auto& r : table.rows) put_row(r);
  return os.str();
}

std::string format_number(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

}  // namespace dermkit
