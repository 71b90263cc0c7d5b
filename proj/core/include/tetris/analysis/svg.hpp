#pragma once

#include <string>
#include <vector>

namespace tetris {

struct SvgSeries {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

// Standalone SVG line plot with axes, tick labels and a legend. Non-finite
// points are skipped.
std::string svg_line_plot(const std::string& title, const std::string& x_label, const std::string& y_label,
                          const std::vector<SvgSeries>& series);

} // namespace tetris
