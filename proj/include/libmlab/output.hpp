#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace libmlab {

// Shortest decimal that round-trips to the same double.
std::string format_double(double v);

// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);

// Writes text to path, creating parent directories.
void write_text(const std::filesystem::path& path, std::string_view text);

// Accumulates one CSV table in memory.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);
  CsvTable& row(const std::vector<double>& values);
  // Mixed row of already formatted cells.
  CsvTable& raw(const std::vector<std::string>& cells);
  std::string str() const { return text_; }

 private:
  std::size_t columns_;
  std::string text_;
};

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct ChartSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
};

// Minimal SVG line chart; output depends only on the inputs.
std::string svg_line_chart(const ChartSpec& spec,
                           const std::vector<Series>& series);

}  // namespace libmlab
