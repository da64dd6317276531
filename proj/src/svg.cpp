#include "gtvc/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "gtvc/errors.hpp"

namespace gtvc {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kMargin = 50.0;

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

}  // namespace

std::string render_curve_svg(const CurveSeries& series) {
    const size_t n = series.x.size();
    if (n < 2 || series.y.size() != n || series.lo.size() != n || series.hi.size() != n) {
        throw DataError("curve series needs at least 2 aligned points");
    }

    double ymin = series.lo[0], ymax = series.hi[0];
    for (size_t i = 0; i < n; ++i) {
        ymin = std::min({ymin, series.lo[i], series.y[i]});
        ymax = std::max({ymax, series.hi[i], series.y[i]});
    }
    ymin = std::min(ymin, 0.0);
    ymax = std::max(ymax, 0.0);
    if (ymax - ymin < 1e-12) {
        ymax += 0.5;
        ymin -= 0.5;
    }
    const double xmin = series.x.front(), xmax = series.x.back();

    auto px = [&](double x) { return kMargin + (x - xmin) / (xmax - xmin) * (kWidth - 2 * kMargin); };
    auto py = [&](double y) { return kHeight - kMargin - (y - ymin) / (ymax - ymin) * (kHeight - 2 * kMargin); };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
        << series.title << "</text>\n";

    // Confidence band: upper path forward, lower path backward.
    svg << "<polygon fill=\"#b8c6e0\" fill-opacity=\"0.6\" stroke=\"none\" points=\"";
    for (size_t i = 0; i < n; ++i) svg << fmt(px(series.x[i])) << "," << fmt(py(series.hi[i])) << " ";
    for (size_t i = n; i-- > 0;) svg << fmt(px(series.x[i])) << "," << fmt(py(series.lo[i])) << " ";
    svg << "\"/>\n";

    // Zero reference.
    svg << "<line x1=\"" << fmt(px(xmin)) << "\" y1=\"" << fmt(py(0.0)) << "\" x2=\"" << fmt(px(xmax))
        << "\" y2=\"" << fmt(py(0.0)) << "\" stroke=\"#999999\" stroke-dasharray=\"4,3\"/>\n";

    svg << "<polyline fill=\"none\" stroke=\"#1f3d7a\" stroke-width=\"2\" points=\"";
    for (size_t i = 0; i < n; ++i) svg << fmt(px(series.x[i])) << "," << fmt(py(series.y[i])) << " ";
    svg << "\"/>\n";

    // Axes with extent labels.
    svg << "<line x1=\"" << fmt(kMargin) << "\" y1=\"" << fmt(kHeight - kMargin) << "\" x2=\""
        << fmt(kWidth - kMargin) << "\" y2=\"" << fmt(kHeight - kMargin) << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << fmt(kMargin) << "\" y1=\"" << fmt(kMargin) << "\" x2=\"" << fmt(kMargin)
        << "\" y2=\"" << fmt(kHeight - kMargin) << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << fmt(kMargin) << "\" y=\"" << fmt(kHeight - kMargin + 18)
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(xmin) << "</text>\n";
    svg << "<text x=\"" << fmt(kWidth - kMargin) << "\" y=\"" << fmt(kHeight - kMargin + 18)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(xmax) << "</text>\n";
    svg << "<text x=\"" << fmt(kMargin - 6) << "\" y=\"" << fmt(py(ymin))
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(ymin) << "</text>\n";
    svg << "<text x=\"" << fmt(kMargin - 6) << "\" y=\"" << fmt(py(ymax))
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(ymax) << "</text>\n";
    svg << "</svg>\n";
    return svg.str();
}

void write_svg(const std::string& path, const CurveSeries& series) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write SVG file: " + path);
    out << render_curve_svg(series);
}

}  // namespace gtvc
