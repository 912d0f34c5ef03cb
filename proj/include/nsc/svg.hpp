#pragma once

#include <string>
#include <vector>

namespace nsc {

struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    bool markers = false;
};

struct PlotPanel {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_x = false;
    bool log_y = false;
    std::vector<PlotSeries> series;
    /// Free text lines drawn in the top-left corner of the plot area.
    std::vector<std::string> notes;
};

/// Static SVG with the panels stacked vertically. Series longer than 4000
/// points are thinned by a fixed stride.
std::string render_svg(const std::vector<PlotPanel>& panels, int width = 820, int panel_height = 280);

/// Least-squares slope of log(y) against log(x); NaN when fewer than two positive pairs.
double log_log_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace nsc
