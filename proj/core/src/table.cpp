#include "topictrend/table.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "topictrend/corpus.hpp"
#include "topictrend/error.hpp"

namespace topictrend {

namespace {

std::string clean_cell(const std::string& s) {
  std::string out = s;
  for (char& c : out)
    if (c == '\t' || c == '\n' || c == '\r') c = ' ';
  return out;
}

}  // namespace

std::string Table::to_string(char delimiter) const {
  std::string out;
  auto emit = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i > 0) out += delimiter;
      out += clean_cell(row[i]);
    }
    out += '\n';
  };
  emit(header);
  for (const auto& r : rows) emit(r);
  return out;
}

void Table::write(const std::filesystem::path& path, char delimiter) const {
  write_text_file(path, to_string(delimiter));
}

Table Table::read(const std::filesystem::path& path, char delimiter) {
  const std::string content = read_text_file(path);
  Table t;
  std::istringstream in(content);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      auto pos = line.find(delimiter, start);
      cells.push_back(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
      if (pos == std::string::npos) break;
      start = pos + 1;
    }
    if (first) {
      t.header = std::move(cells);
      first = false;
    } else if (!(cells.size() == 1 && cells[0].empty())) {
      t.rows.push_back(std::move(cells));
    }
  }
  if (first) throw IoError(fmt::format("'{}' is empty", path.string()));
  return t;
}

std::size_t Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw ValidationError(fmt::format("table has no column '{}'", name));
}

std::string format_number(double v) {
  if (!std::isfinite(v)) return "NA";
  return fmt::format("{}", v);
}

std::string format_number(double v, int significant) {
  if (!std::isfinite(v)) return "NA";
  return fmt::format("{:.{}g}", v, significant);
}

std::string format_optional(const std::optional<double>& v) { return v ? format_number(*v) : std::string{}; }

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
  out << content;
  if (!out) throw IoError(fmt::format("write failed for '{}'", path.string()));
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot read '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace topictrend
