#pragma once

#include <string>
#include <vector>

namespace gtvc {

struct CurveSeries {
    std::string title;
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> lo;
    std::vector<double> hi;
};

// Self-contained SVG: band polygon behind the point-estimate polyline with a
// zero reference line and min/max axis labels. Output is byte-stable for
// identical inputs.
std::string render_curve_svg(const CurveSeries& series);

void write_svg(const std::string& path, const CurveSeries& series);

}  // namespace gtvc
