#pragma once

#include <Eigen/Core>

#include <map>
#include <string>
#include <vector>

namespace emdist {

inline constexpr const char* kToolVersion = "0.1.0";

/// Shortest-round-trip formatting; every written value reads back exactly.
std::string format_double(double v);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

void write_csv(const std::string& path, const CsvTable& table);
CsvTable read_csv(const std::string& path);

/// Per-run record of how outputs were produced. `wall_clock_sec` is the only
/// field allowed to differ between reruns of the same command.
struct RunManifest {
  std::string command;
  std::string version = kToolVersion;
  std::string config_json;  // serialized config snapshot
  std::map<std::string, std::uint64_t> seeds;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  double wall_clock_sec = 0.0;

  void write(const std::string& path) const;
};

/// Minimal SVG line plot, one polyline per series.
struct SvgSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f77b4";
};
void write_line_svg(const std::string& path, const std::string& title,
                    const std::vector<SvgSeries>& series);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace emdist
