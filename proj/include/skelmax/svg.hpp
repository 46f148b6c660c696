#ifndef SKELMAX_SVG_HPP
#define SKELMAX_SVG_HPP

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "skelmax/common.hpp"

namespace skelmax {

// Self-contained log-log scatter plot with an optional straight-line fit
// overlay. Deterministic output for fixed input.
inline void writeLogLogSvg(const std::string& path,
                           const std::vector<std::pair<double, double>>& points,
                           double fitSlope, double fitIntercept, const std::string& title) {
    if (points.empty()) throw Error("invalid-input", "nothing to plot");
    const int W = 640, H = 480, M = 56;

    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& [x, y] : points) {
        if (!(x > 0.0) || !(y > 0.0)) throw Error("invalid-input", "log-log plot needs positive data");
        xmin = std::min(xmin, std::log10(x));
        xmax = std::max(xmax, std::log10(x));
        ymin = std::min(ymin, std::log10(y));
        ymax = std::max(ymax, std::log10(y));
    }
    if (xmax - xmin < 1e-12) { xmin -= 0.5; xmax += 0.5; }
    if (ymax - ymin < 1e-12) { ymin -= 0.5; ymax += 0.5; }
    double padx = 0.06 * (xmax - xmin), pady = 0.10 * (ymax - ymin);
    xmin -= padx; xmax += padx; ymin -= pady; ymax += pady;

    auto px = [&](double lx) { return M + (lx - xmin) / (xmax - xmin) * (W - 2 * M); };
    auto py = [&](double ly) { return H - M - (ly - ymin) / (ymax - ymin) * (H - 2 * M); };

    std::ofstream out(path);
    if (!out) throw Error("io-error", "cannot open for writing: " + path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"14\">" << title << "</text>\n";
    out << "<line x1=\"" << M << "\" y1=\"" << H - M << "\" x2=\"" << W - M << "\" y2=\"" << H - M
        << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << M << "\" y1=\"" << M << "\" x2=\"" << M << "\" y2=\"" << H - M
        << "\" stroke=\"black\"/>\n";

    // decade ticks
    for (int d = static_cast<int>(std::ceil(xmin)); d <= static_cast<int>(std::floor(xmax)); ++d) {
        double x = px(d);
        out << "<line x1=\"" << x << "\" y1=\"" << H - M << "\" x2=\"" << x << "\" y2=\"" << H - M + 5
            << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << x << "\" y=\"" << H - M + 20
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">1e" << d
            << "</text>\n";
    }
    for (int d = static_cast<int>(std::ceil(ymin)); d <= static_cast<int>(std::floor(ymax)); ++d) {
        double y = py(d);
        out << "<line x1=\"" << M - 5 << "\" y1=\"" << y << "\" x2=\"" << M << "\" y2=\"" << y
            << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << M - 8 << "\" y=\"" << y + 4
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">1e" << d
            << "</text>\n";
    }

    // fit overlay: log y = intercept + slope * log x (natural logs in, draw in log10)
    {
        double lx0 = xmin + 0.02, lx1 = xmax - 0.02;
        const double ln10 = 2.302585092994046;
        double ly0 = (fitIntercept + fitSlope * lx0 * ln10) / ln10;
        double ly1 = (fitIntercept + fitSlope * lx1 * ln10) / ln10;
        out << "<line x1=\"" << px(lx0) << "\" y1=\"" << py(ly0) << "\" x2=\"" << px(lx1)
            << "\" y2=\"" << py(ly1) << "\" stroke=\"#cc3333\" stroke-width=\"1.5\"/>\n";
    }
    for (const auto& [x, y] : points)
        out << "<circle cx=\"" << px(std::log10(x)) << "\" cy=\"" << py(std::log10(y))
            << "\" r=\"3.5\" fill=\"#2255aa\"/>\n";
    out << "</svg>\n";
}

} // namespace skelmax

#endif
