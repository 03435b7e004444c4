#include "vevar/csv.hpp"

#include "vevar/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace vevar::csv {

std::size_t Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw ValidationError("missing column '" + std::string(name) + "'");
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

Table read(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open " + path.string());
  Table t;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    require(cells.size() == t.header.size(), path.string() + ":" + std::to_string(lineno) + ": expected " +
                                                 std::to_string(t.header.size()) + " fields, found " +
                                                 std::to_string(cells.size()));
    t.rows.push_back(std::move(cells));
  }
  require(!t.header.empty(), path.string() + ": empty file (header row required)");
  return t;
}

void write(const std::filesystem::path& path, const Table& table) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "cannot write " + path.string());
  auto put = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out << ',';
      out << cells[i];
    }
    out << '\n';
  };
  put(table.header);
  for (const auto& r : table.rows) put(r);
  require(out.good(), "write failed: " + path.string());
}

std::string format(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string format(long v) { return std::to_string(v); }

double parse_double(std::string_view s, const std::string& where) {
  double v = 0;
  const char* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) {
    throw ValidationError(where + ": not a number: '" + std::string(s) + "'");
  }
  return v;
}

long parse_long(std::string_view s, const std::string& where) {
  long v = 0;
  const char* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) {
    throw ValidationError(where + ": not an integer: '" + std::string(s) + "'");
  }
  return v;
}

bool parse_bool(std::string_view s, const std::string& where) {
  if (s == "1" || s == "true") return true;
  if (s == "0" || s == "false") return false;
  throw ValidationError(where + ": not a boolean: '" + std::string(s) + "'");
}

}  // namespace vevar::csv
