#pragma once

#include <string>
#include <vector>

namespace fpinv::bench {

struct PlotSeries {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

struct PlotSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_y = false;
    std::vector<PlotSeries> series;
};

/// Minimal standalone SVG line chart. Non-finite points (and non-positive ones
/// on a log axis) are skipped.
std::string render_svg(const PlotSpec& spec);

}  // namespace fpinv::bench
