#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace mortality {

struct ChartSeries {
    std::string label;
    std::vector<double> xs;
    std::vector<double> ys;
    /// Optional shaded band (same length as xs), drawn under the line.
    std::optional<std::vector<double>> band_lower = std::nullopt;
    std::optional<std::vector<double>> band_upper = std::nullopt;
};

struct ChartSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    int width = 720;
    int height = 440;
};

/// Standalone SVG line chart with axes, tick labels and a legend. Output is
/// a pure function of the input (fixed number formatting, no timestamps).
std::string render_line_chart(const std::vector<ChartSeries>& series, const ChartSpec& spec);

void write_line_chart(const std::vector<ChartSeries>& series, const ChartSpec& spec, const std::string& path);

}  // namespace mortality
