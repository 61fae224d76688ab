#pragma once
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace shapegeo::svg {

struct Polyline {
    std::vector<double> x, y;
    bool closed = false;
    std::string label;
};

// Standalone SVG with equal or independent axis scaling. Coordinates are
// printed with fixed precision so the output is reproducible.
inline std::string render(const std::vector<Polyline>& lines, const std::string& title, bool equal_aspect,
                          int width = 640, int height = 480) {
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b"};
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (auto& l : lines)
        for (std::size_t i = 0; i < l.x.size(); ++i) {
            if (!std::isfinite(l.x[i]) || !std::isfinite(l.y[i])) continue;
            x0 = std::min(x0, l.x[i]);
            x1 = std::max(x1, l.x[i]);
            y0 = std::min(y0, l.y[i]);
            y1 = std::max(y1, l.y[i]);
        }
    if (!(x1 > x0)) x0 -= 0.5, x1 += 0.5;
    if (!(y1 > y0)) y0 -= 0.5, y1 += 0.5;
    const double margin = 40;
    double sx = (width - 2 * margin) / (x1 - x0), sy = (height - 2 * margin) / (y1 - y0);
    if (equal_aspect) sx = sy = std::min(sx, sy);
    auto X = [&](double x) { return margin + (x - x0) * sx; };
    auto Y = [&](double y) { return height - margin - (y - y0) * sy; };

    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(3);
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
    s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s << "<text x=\"" << margin << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">" << title << "</text>\n";
    s << "<text x=\"" << margin << "\" y=\"" << height - 10 << "\" font-family=\"sans-serif\" font-size=\"10\">x: ["
      << x0 << ", " << x1 << "]  y: [" << y0 << ", " << y1 << "]</text>\n";
    for (std::size_t k = 0; k < lines.size(); ++k) {
        auto& l = lines[k];
        s << "<" << (l.closed ? "polygon" : "polyline") << " fill=\"none\" stroke=\"" << palette[k % 7]
          << "\" stroke-width=\"1.2\" points=\"";
        for (std::size_t i = 0; i < l.x.size(); ++i)
            if (std::isfinite(l.x[i]) && std::isfinite(l.y[i])) s << X(l.x[i]) << "," << Y(l.y[i]) << " ";
        s << "\"/>\n";
        if (!l.label.empty())
            s << "<text x=\"" << width - 150 << "\" y=\"" << 40 + 14 * k << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\""
              << palette[k % 7] << "\">" << l.label << "</text>\n";
    }
    s << "</svg>\n";
    return s.str();
}

}  // namespace shapegeo::svg
