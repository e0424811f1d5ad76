#include "curvealign/csv.hpp"

#include <fmt/format.h>

#include <charconv>
#include <fstream>
#include <sstream>

#include "curvealign/error.hpp"

namespace curvealign::csv {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace

std::string format_double(double v) { return fmt::format("{:.17g}", v); }

int Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return static_cast<int>(i);
  return -1;
}

std::vector<double> Table::values(std::string_view name) const {
  const int c = column(name);
  if (c < 0) throw Error(ErrorKind::Format, fmt::format("missing column '{}'", name));
  const auto ci = static_cast<std::size_t>(c);
  std::vector<double> out(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (!parse_double(rows[r][ci], out[r]))
      throw Error(ErrorKind::Parse,
                  fmt::format("line {}, column {}: '{}' is not a number", lines[r], ci + 1, rows[r][ci]));
  }
  return out;
}

std::vector<std::string> Table::text(std::string_view name) const {
  const int c = column(name);
  if (c < 0) throw Error(ErrorKind::Format, fmt::format("missing column '{}'", name));
  std::vector<std::string> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[static_cast<std::size_t>(c)]);
  return out;
}

Table parse_table(std::string_view text) {
  Table table;
  std::size_t line_no = 0;
  bool have_header = false;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') {
      if (end == text.size()) break;
      continue;
    }
    auto cells = split(line, ',');
    if (!have_header) {
      for (auto c : cells) table.columns.emplace_back(trim(c));
      have_header = true;
    } else {
      if (cells.size() != table.columns.size())
        throw Error(ErrorKind::Format, fmt::format("line {}: expected {} fields, got {}", line_no,
                                                   table.columns.size(), cells.size()));
      std::vector<std::string> row;
      row.reserve(cells.size());
      for (auto c : cells) row.emplace_back(trim(c));
      table.rows.push_back(std::move(row));
      table.lines.push_back(line_no);
    }
    if (end == text.size()) break;
  }
  if (!have_header) throw Error(ErrorKind::InsufficientData, "table has no header");
  return table;
}

Table read_table(const std::filesystem::path& path) { return parse_table(read_file(path)); }

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, fmt::format("cannot open '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, fmt::format("cannot write '{}'", path.string()));
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error(ErrorKind::Io, fmt::format("write failed for '{}'", path.string()));
}

std::vector<double> read_numbers(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  std::vector<double> out;
  std::size_t line_no = 0;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view sv = trim(line);
    if (sv.empty() || sv.front() == '#') continue;
    for (auto cell : split(sv, ',')) {
      if (trim(cell).empty()) continue;
      double v = 0.0;
      if (!parse_double(cell, v))
        throw Error(ErrorKind::Parse, fmt::format("line {}: '{}' is not a number", line_no, trim(cell)));
      out.push_back(v);
    }
  }
  return out;
}

}  // namespace curvealign::csv
