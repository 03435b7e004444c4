#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace vevar::csv {

/// Header plus string cells. Every row has header.size() cells.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column position by name; throws ValidationError when absent.
  std::size_t column(std::string_view name) const;
};

/// Plain comma-separated values: no quoting, no embedded commas.
Table read(const std::filesystem::path& path);
void write(const std::filesystem::path& path, const Table& table);

/// Shortest decimal text that parses back to the same double.
std::string format(double v);
std::string format(long v);
inline std::string format(int v) { return format(static_cast<long>(v)); }
inline std::string format(bool v) { return v ? "1" : "0"; }

/// Strict parsers; `where` prefixes the error message (e.g. "file.csv:12").
double parse_double(std::string_view s, const std::string& where);
long parse_long(std::string_view s, const std::string& where);
bool parse_bool(std::string_view s, const std::string& where);

}  // namespace vevar::csv
