#include "rwb/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "rwb/errors.hpp"

namespace rwb {

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw IoError("column \"" + name + "\" not found");
}

std::string format_number(double v) {
  if (std::isnan(v)) return "";
  if (v == 0.0) v = 0.0;  // drop the sign of negative zero
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

CsvTable sweep_table(const std::string& parameter, const std::vector<SweepPoint>& points) {
  CsvTable t;
  t.header = {parameter, "F_l", "F_u", "F_u_c", "F_l_c", "status_l", "status_u", "status_u_c", "status_l_c"};
  const bool oracle = std::any_of(points.begin(), points.end(), [](const auto& p) { return !std::isnan(p.oracle); });
  if (oracle) t.header.push_back("F_oracle");
  for (const auto& p : points) {
    const auto& b = p.bounds;
    std::vector<std::string> row = {format_number(p.value),
                                    format_number(b.lower.value),
                                    format_number(b.upper.value),
                                    format_number(b.comparison_upper.value),
                                    format_number(b.comparison_lower.value),
                                    status_token(b.lower),
                                    status_token(b.upper),
                                    status_token(b.comparison_upper),
                                    status_token(b.comparison_lower)};
    if (oracle) row.push_back(format_number(p.oracle));
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::string to_csv(const CsvTable& table) {
  std::string out;
  const auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  line(table.header);
  for (const auto& r : table.rows) line(r);
  return out;
}

CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.emplace_back();
    if (first) {
      t.header = std::move(cells);
      first = false;
    } else {
      cells.resize(t.header.size());
      t.rows.push_back(std::move(cells));
    }
  }
  return t;
}

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 150.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;
constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

bool parse_value(const std::string& s, double& v) {
  if (s.empty()) return false;
  try {
    std::size_t used = 0;
    v = std::stod(s, &used);
    return used == s.size() && std::isfinite(v);
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace

std::string to_svg(const CsvTable& table, const PlotSpec& spec) {
  const std::size_t xc = table.column(spec.x);
  std::vector<std::size_t> yc;
  for (const auto& y : spec.y) yc.push_back(table.column(y));

  struct Series {
    std::vector<std::pair<double, double>> points;
  };
  std::vector<Series> series(yc.size());
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& row : table.rows) {
    double x = 0.0;
    if (!parse_value(row[xc], x)) continue;
    for (std::size_t s = 0; s < yc.size(); ++s) {
      double y = 0.0;
      if (!parse_value(row[yc[s]], y)) continue;
      if (spec.log_y) {
        if (y <= 0.0) continue;
        y = std::log10(y);
      }
      series[s].points.emplace_back(x, y);
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  }
  if (!std::isfinite(x0)) x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
  if (x1 == x0) x0 -= 0.5, x1 += 0.5;
  if (spec.log_y) {
    y0 = std::floor(y0);
    y1 = std::ceil(y1);
    if (y1 == y0) y1 += 1.0;
  } else {
    if (y1 == y0) y0 -= 0.5, y1 += 0.5;
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
  }

  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  const auto px = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * pw; };
  const auto py = [&](double y) { return kTop + ph - (y - y0) / (y1 - y0) * ph; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!spec.title.empty())
    os << "<text x=\"" << fixed(kLeft + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
       << escape(spec.title) << "</text>\n";
  os << "<rect x=\"" << fixed(kLeft) << "\" y=\"" << fixed(kTop) << "\" width=\"" << fixed(pw) << "\" height=\""
     << fixed(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";

  for (int i = 0; i <= 5; ++i) {
    const double x = x0 + (x1 - x0) * i / 5.0;
    os << "<line x1=\"" << fixed(px(x)) << "\" y1=\"" << fixed(kTop + ph) << "\" x2=\"" << fixed(px(x)) << "\" y2=\""
       << fixed(kTop + ph + 5) << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << fixed(px(x)) << "\" y=\"" << fixed(kTop + ph + 18) << "\" text-anchor=\"middle\">"
       << tick_label(x) << "</text>\n";
  }
  std::vector<double> yticks;
  if (spec.log_y) {
    for (double e = y0; e <= y1 + 1e-9; e += 1.0) yticks.push_back(e);
  } else {
    for (int i = 0; i <= 5; ++i) yticks.push_back(y0 + (y1 - y0) * i / 5.0);
  }
  for (double y : yticks) {
    os << "<line x1=\"" << fixed(kLeft - 5) << "\" y1=\"" << fixed(py(y)) << "\" x2=\"" << fixed(kLeft)
       << "\" y2=\"" << fixed(py(y)) << "\" stroke=\"black\"/>\n";
    const std::string label = spec.log_y ? "1e" + std::to_string(static_cast<int>(std::lround(y))) : tick_label(y);
    os << "<text x=\"" << fixed(kLeft - 8) << "\" y=\"" << fixed(py(y) + 4) << "\" text-anchor=\"end\">" << label
       << "</text>\n";
  }
  const std::string xl = spec.x_label.empty() ? spec.x : spec.x_label;
  os << "<text x=\"" << fixed(kLeft + pw / 2) << "\" y=\"" << fixed(kHeight - 10) << "\" text-anchor=\"middle\">"
     << escape(xl) << "</text>\n";
  if (!spec.y_label.empty())
    os << "<text x=\"16\" y=\"" << fixed(kTop + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
       << fixed(kTop + ph / 2) << ")\">" << escape(spec.y_label) << "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kColors[s % std::size(kColors)];
    const auto& pts = series[s].points;
    if (pts.size() >= 2) {
      os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < pts.size(); ++i) {
        if (i) os << ' ';
        os << fixed(px(pts[i].first)) << ',' << fixed(py(pts[i].second));
      }
      os << "\"/>\n";
    }
    for (const auto& [x, y] : pts)
      os << "<circle cx=\"" << fixed(px(x)) << "\" cy=\"" << fixed(py(y)) << "\" r=\"2.5\" fill=\"" << color
         << "\"/>\n";
    const double ly = kTop + 14.0 + 18.0 * static_cast<double>(s);
    os << "<line x1=\"" << fixed(kLeft + pw + 12) << "\" y1=\"" << fixed(ly) << "\" x2=\"" << fixed(kLeft + pw + 32)
       << "\" y2=\"" << fixed(ly) << "\" stroke=\"" << color << "\" stroke-width=\"1.5\"/>\n";
    os << "<text x=\"" << fixed(kLeft + pw + 38) << "\" y=\"" << fixed(ly + 4) << "\">" << escape(spec.y[s])
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("cannot write " + path.string());
}

}  // namespace rwb
