#include "emdist/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace emdist {

std::string format_double(double v) {
  char buf[40];
  // shortest representation that round-trips
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_csv(const std::string& path, const CsvTable& table) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write csv: " + path);
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (i) out << ',';
    out << table.header[i];
  }
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << format_double(row[i]);
    }
    out << '\n';
  }
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open csv: " + path);
  CsvTable table;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    if (first) {
      while (std::getline(ss, cell, ',')) table.header.push_back(cell);
      first = false;
      continue;
    }
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) row.push_back(std::strtod(cell.c_str(), nullptr));
    table.rows.push_back(std::move(row));
  }
  return table;
}

void RunManifest::write(const std::string& path) const {
  nlohmann::json j;
  j["command"] = command;
  j["version"] = version;
  j["config"] = config_json.empty() ? nlohmann::json::object()
                                    : nlohmann::json::parse(config_json);
  j["seeds"] = seeds;
  j["inputs"] = inputs;
  j["outputs"] = outputs;
  j["wall_clock_sec"] = wall_clock_sec;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write manifest: " + path);
  out << j.dump(2) << "\n";
}

void write_line_svg(const std::string& path, const std::string& title,
                    const std::vector<SvgSeries>& series) {
  const int width = 640, height = 400;
  const int ml = 60, mr = 20, mt = 40, mb = 40;
  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  bool any = false;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      if (!any) {
        xmin = xmax = s.x[i];
        ymin = ymax = s.y[i];
        any = true;
      } else {
        xmin = std::min(xmin, s.x[i]);
        xmax = std::max(xmax, s.x[i]);
        ymin = std::min(ymin, s.y[i]);
        ymax = std::max(ymax, s.y[i]);
      }
    }
  }
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;
  auto sx = [&](double x) {
    return ml + (x - xmin) / (xmax - xmin) * (width - ml - mr);
  };
  auto sy = [&](double y) {
    return height - mb - (y - ymin) / (ymax - ymin) * (height - mt - mb);
  };
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write svg: " + path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"14\">" << title
      << "</text>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << height - mb << "\" x2=\""
      << width - mr << "\" y2=\"" << height - mb
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml
      << "\" y2=\"" << height - mb << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << ml << "\" y=\"" << height - mb + 16
      << "\" font-family=\"sans-serif\" font-size=\"10\">" << format_double(xmin)
      << "</text>\n";
  out << "<text x=\"" << width - mr << "\" y=\"" << height - mb + 16
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">"
      << format_double(xmax) << "</text>\n";
  out << "<text x=\"" << ml - 4 << "\" y=\"" << height - mb
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">"
      << format_double(ymin) << "</text>\n";
  out << "<text x=\"" << ml - 4 << "\" y=\"" << mt + 8
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">"
      << format_double(ymax) << "</text>\n";
  int legend_y = mt;
  for (const auto& s : series) {
    out << "<polyline fill=\"none\" stroke=\"" << s.color
        << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      out << sx(s.x[i]) << ',' << sy(s.y[i]) << ' ';
    }
    out << "\"/>\n";
    if (!s.label.empty()) {
      out << "<text x=\"" << width - mr - 4 << "\" y=\"" << legend_y
          << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
             "font-size=\"11\" fill=\""
          << s.color << "\">" << s.label << "</text>\n";
      legend_y += 14;
    }
  }
  out << "</svg>\n";
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << text;
}

}  // namespace emdist
