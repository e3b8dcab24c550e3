#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace sketchavg {

struct ChartSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct ChartOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = true;
  int width = 720;
  int height = 440;
};

/// Minimal standalone SVG line chart. Non-positive values are skipped on a log axis.
std::string render_line_chart(const std::vector<ChartSeries>& series, const ChartOptions& options);
void write_line_chart(const std::filesystem::path& path, const std::vector<ChartSeries>& series,
                      const ChartOptions& options);

}  // namespace sketchavg
