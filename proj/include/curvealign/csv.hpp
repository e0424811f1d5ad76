#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace curvealign::csv {

/// 17 significant digits; reloads to the identical double.
std::string format_double(double v);

/// Comma-separated table with a header row. Cells are kept as text and
/// converted on access.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  /// Source line of each row, for error messages.
  std::vector<std::size_t> lines;

  /// Index of a named column, or -1.
  int column(std::string_view name) const;
  /// Throws Error(Format) for a missing column, Error(Parse) for a non-numeric cell.
  std::vector<double> values(std::string_view name) const;
  std::vector<std::string> text(std::string_view name) const;
};

Table parse_table(std::string_view text);
Table read_table(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

/// All numbers in a file, in reading order, regardless of layout.
std::vector<double> read_numbers(const std::filesystem::path& path);

}  // namespace curvealign::csv
