#pragma once

// Sweep tables as CSV and static SVG line charts.

#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "rwb/bounds.hpp"

namespace rwb {

struct SweepPoint {
  double value = 0.0;
  SandwichResult bounds;
  double oracle = std::numeric_limits<double>::quiet_NaN();  // NaN when not computed
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Throws IoError naming the column when it is absent.
  std::size_t column(const std::string& name) const;
};

/// Floats at 12 significant digits; missing values are empty fields.
std::string format_number(double v);

/// Columns: parameter, F_l, F_u, F_u_c, F_l_c, then the four status tokens,
/// then F_oracle when any point carries an oracle value.
CsvTable sweep_table(const std::string& parameter, const std::vector<SweepPoint>& points);

std::string to_csv(const CsvTable& table);
CsvTable parse_csv(const std::string& text);

struct PlotSpec {
  std::string x;
  std::vector<std::string> y;
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;
};

/// Deterministic SVG chart. Throws IoError for a missing column.
std::string to_svg(const CsvTable& table, const PlotSpec& spec);

/// Throws IoError when the file cannot be written.
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace rwb
