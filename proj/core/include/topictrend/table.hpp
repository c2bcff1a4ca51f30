#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace topictrend {

/// A delimited text table. Cells are written verbatim; tabs and newlines
/// inside cells are replaced by spaces.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> row) { rows.push_back(std::move(row)); }
  std::string to_string(char delimiter = '\t') const;
  void write(const std::filesystem::path& path, char delimiter = '\t') const;
  static Table read(const std::filesystem::path& path, char delimiter = '\t');
  /// Index of a header column; throws ValidationError when absent.
  std::size_t column(const std::string& name) const;
};

/// Shortest round-trip representation, "NA" for non-finite values.
std::string format_number(double v);
/// Fixed number of significant digits, as in report tables.
std::string format_number(double v, int significant);
std::string format_optional(const std::optional<double>& v);

/// Writes `content` atomically enough for our purposes: parent directories
/// are created first.
void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace topictrend
