#include "fpinv/bench/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace fpinv::bench {

namespace {

constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 70, kRight = 150, kTop = 40, kBottom = 50;
constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string fmt(double v) {
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
            default: out += c;
        }
    }
    return out;
}

}  // namespace

std::string render_svg(const PlotSpec& spec) {
    auto yval = [&](double y) { return spec.log_y ? std::log10(y) : y; };
    auto usable = [&](double x, double y) { return std::isfinite(x) && std::isfinite(y) && (!spec.log_y || y > 0); };

    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : spec.series)
        for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
            if (!usable(s.x[i], s.y[i])) continue;
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, yval(s.y[i]));
            y1 = std::max(y1, yval(s.y[i]));
        }
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 == x0) x1 = x0 + 1;
    if (y1 == y0) y1 = y0 + 1;

    const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
    auto px = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * pw; };
    auto py = [&](double y) { return kTop + ph - (yval(y) - y0) / (y1 - y0) * ph; };

    std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(kWidth) + "\" height=\"" +
                      fmt(kHeight) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "<text x=\"" + fmt(kWidth / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" +
           escape(spec.title) + "</text>\n";
    svg += "<rect x=\"" + fmt(kLeft) + "\" y=\"" + fmt(kTop) + "\" width=\"" + fmt(pw) + "\" height=\"" + fmt(ph) +
           "\" fill=\"none\" stroke=\"black\"/>\n";

    for (int k = 0; k <= 4; ++k) {
        const double xv = x0 + (x1 - x0) * k / 4.0;
        const double yv = y0 + (y1 - y0) * k / 4.0;
        const double gx = kLeft + pw * k / 4.0, gy = kTop + ph - ph * k / 4.0;
        svg += "<text x=\"" + fmt(gx) + "\" y=\"" + fmt(kTop + ph + 16) + "\" text-anchor=\"middle\">" + fmt(xv) +
               "</text>\n";
        const std::string ylab = spec.log_y ? "1e" + fmt(yv) : fmt(yv);
        svg += "<text x=\"" + fmt(kLeft - 6) + "\" y=\"" + fmt(gy + 4) + "\" text-anchor=\"end\">" + ylab +
               "</text>\n";
        svg += "<line x1=\"" + fmt(kLeft) + "\" x2=\"" + fmt(kLeft + pw) + "\" y1=\"" + fmt(gy) + "\" y2=\"" +
               fmt(gy) + "\" stroke=\"#ddd\"/>\n";
    }
    svg += "<text x=\"" + fmt(kLeft + pw / 2) + "\" y=\"" + fmt(kHeight - 10) + "\" text-anchor=\"middle\">" +
           escape(spec.x_label) + "</text>\n";
    svg += "<text transform=\"translate(16," + fmt(kTop + ph / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
           escape(spec.y_label + (spec.log_y ? " (log10)" : "")) + "</text>\n";

    for (std::size_t si = 0; si < spec.series.size(); ++si) {
        const auto& s = spec.series[si];
        const char* color = kColors[si % std::size(kColors)];
        std::string points;
        for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
            if (!usable(s.x[i], s.y[i])) continue;
            points += fmt(px(s.x[i])) + "," + fmt(py(s.y[i])) + " ";
            svg += "<circle cx=\"" + fmt(px(s.x[i])) + "\" cy=\"" + fmt(py(s.y[i])) + "\" r=\"2.5\" fill=\"" +
                   color + "\"/>\n";
        }
        svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"" +
               points + "\"/>\n";
        const double ly = kTop + 14 + 18.0 * static_cast<double>(si);
        svg += "<line x1=\"" + fmt(kWidth - kRight + 12) + "\" x2=\"" + fmt(kWidth - kRight + 32) + "\" y1=\"" +
               fmt(ly) + "\" y2=\"" + fmt(ly) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
        svg += "<text x=\"" + fmt(kWidth - kRight + 38) + "\" y=\"" + fmt(ly + 4) + "\">" + escape(s.name) +
               "</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

}  // namespace fpinv::bench
