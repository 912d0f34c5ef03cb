#include "nsc/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace nsc {

namespace {

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick_label(double v) {
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
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    void add(double v) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    void settle() {
        if (!std::isfinite(lo) || !std::isfinite(hi)) {
            lo = 0.0;
            hi = 1.0;
        } else if (hi - lo < 1e-300) {
            const double pad = std::max(std::abs(lo) * 0.05, 1e-12);
            lo -= pad;
            hi += pad;
        }
    }
};

bool usable(double v, bool log) { return std::isfinite(v) && (!log || v > 0.0); }
double axis_value(double v, bool log) { return log ? std::log10(v) : v; }

}  // namespace

std::string render_svg(const std::vector<PlotPanel>& panels, int width, int panel_height) {
    const double left = 80, right = 170, top = 34, bottom = 46;
    const int height = static_cast<int>(panels.size()) * panel_height;
    std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) + "\" height=\"" +
                      std::to_string(std::max(height, 1)) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    for (std::size_t p = 0; p < panels.size(); ++p) {
        const PlotPanel& panel = panels[p];
        const double y0 = static_cast<double>(p) * panel_height;
        const double pw = width - left - right;
        const double ph = panel_height - top - bottom;
        Range rx, ry;
        for (const auto& s : panel.series)
            for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i)
                if (usable(s.x[i], panel.log_x) && usable(s.y[i], panel.log_y)) {
                    rx.add(axis_value(s.x[i], panel.log_x));
                    ry.add(axis_value(s.y[i], panel.log_y));
                }
        rx.settle();
        ry.settle();
        auto sx = [&](double v) { return left + (axis_value(v, panel.log_x) - rx.lo) / (rx.hi - rx.lo) * pw; };
        auto sy = [&](double v) { return y0 + top + ph - (axis_value(v, panel.log_y) - ry.lo) / (ry.hi - ry.lo) * ph; };

        out += "<text x=\"" + num(left) + "\" y=\"" + num(y0 + 20) + "\" font-size=\"13\" font-weight=\"bold\">" +
               escape(panel.title) + "</text>\n";
        out += "<rect x=\"" + num(left) + "\" y=\"" + num(y0 + top) + "\" width=\"" + num(pw) + "\" height=\"" + num(ph) +
               "\" fill=\"none\" stroke=\"#333\"/>\n";
        for (int k = 0; k <= 4; ++k) {
            const double fx = rx.lo + (rx.hi - rx.lo) * k / 4.0;
            const double fy = ry.lo + (ry.hi - ry.lo) * k / 4.0;
            const double px = left + pw * k / 4.0;
            const double py = y0 + top + ph - ph * k / 4.0;
            const double lx = panel.log_x ? std::pow(10.0, fx) : fx;
            const double ly = panel.log_y ? std::pow(10.0, fy) : fy;
            out += "<line x1=\"" + num(px) + "\" y1=\"" + num(y0 + top + ph) + "\" x2=\"" + num(px) + "\" y2=\"" +
                   num(y0 + top + ph + 4) + "\" stroke=\"#333\"/>\n";
            out += "<text x=\"" + num(px) + "\" y=\"" + num(y0 + top + ph + 16) + "\" text-anchor=\"middle\">" +
                   tick_label(lx) + "</text>\n";
            out += "<line x1=\"" + num(left - 4) + "\" y1=\"" + num(py) + "\" x2=\"" + num(left) + "\" y2=\"" + num(py) +
                   "\" stroke=\"#333\"/>\n";
            out += "<text x=\"" + num(left - 6) + "\" y=\"" + num(py + 4) + "\" text-anchor=\"end\">" + tick_label(ly) +
                   "</text>\n";
        }
        out += "<text x=\"" + num(left + pw / 2) + "\" y=\"" + num(y0 + panel_height - 8) +
               "\" text-anchor=\"middle\">" + escape(panel.x_label) + "</text>\n";
        out += "<text x=\"14\" y=\"" + num(y0 + top + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 14 " +
               num(y0 + top + ph / 2) + ")\">" + escape(panel.y_label) + "</text>\n";

        for (std::size_t s = 0; s < panel.series.size(); ++s) {
            const PlotSeries& series = panel.series[s];
            const char* color = kColors[s % (sizeof kColors / sizeof kColors[0])];
            const std::size_t n = std::min(series.x.size(), series.y.size());
            const std::size_t stride = std::max<std::size_t>(1, (n + 3999) / 4000);
            std::string pts;
            for (std::size_t i = 0; i < n; i += stride) {
                if (!usable(series.x[i], panel.log_x) || !usable(series.y[i], panel.log_y)) continue;
                pts += num(sx(series.x[i])) + "," + num(sy(series.y[i])) + " ";
                if (series.markers)
                    out += "<circle cx=\"" + num(sx(series.x[i])) + "\" cy=\"" + num(sy(series.y[i])) +
                           "\" r=\"3\" fill=\"" + color + "\"/>\n";
            }
            if (!pts.empty())
                out += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.3\" points=\"" + pts +
                       "\"/>\n";
            const double ly = y0 + top + 12 + 16.0 * static_cast<double>(s);
            out += "<line x1=\"" + num(left + pw + 10) + "\" y1=\"" + num(ly - 4) + "\" x2=\"" + num(left + pw + 28) +
                   "\" y2=\"" + num(ly - 4) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
            out += "<text x=\"" + num(left + pw + 32) + "\" y=\"" + num(ly) + "\">" + escape(series.label) + "</text>\n";
        }
        for (std::size_t k = 0; k < panel.notes.size(); ++k)
            out += "<text x=\"" + num(left + 8) + "\" y=\"" + num(y0 + top + 16 + 14.0 * static_cast<double>(k)) +
                   "\" fill=\"#444\">" + escape(panel.notes[k]) + "</text>\n";
    }
    out += "</svg>\n";
    return out;
}

double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0) || !std::isfinite(x[i]) || !std::isfinite(y[i])) continue;
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++n;
    }
    const double den = n * sxx - sx * sx;
    if (n < 2 || !(std::abs(den) > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    return (n * sxy - sx * sy) / den;
}

}  // namespace nsc
