// svg.hpp — minimal log-log SVG line plots, emitted as pure text.
//
// No graphics dependency: the renderer writes polylines, circles, and text
// into a fixed layout.  Every marker carries machine-readable attributes
// (data-series, data-k, data-mean with data-mean formatted exactly like the
// CSV value), so tests and reviewers can verify plot fidelity by parsing
// the SVG instead of rasterizing it.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "klist/csv.hpp"

namespace klist {

struct SvgSeries {
    std::string name;  ///< legend label, also the data-series attribute
    std::string color; ///< CSS color
    std::string dash;  ///< stroke-dasharray ("" = solid)
    bool markers = false;
    std::vector<std::pair<double, double>> points; ///< (k, value), both > 0
};

struct SvgPlot {
    std::string title;
    std::string x_label = "k";
    std::string y_label = "distortion";
    std::vector<SvgSeries> series;
};

namespace detail {

[[nodiscard]] inline std::string xml_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (const char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out.push_back(c);
        }
    }
    return out;
}

[[nodiscard]] inline std::string svg_coord(double v) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%.2f", v);
    return buffer;
}

} // namespace detail

/// Render a log-log plot.  Throws if any point has a nonpositive
/// coordinate (log axes) or if no series holds data.
[[nodiscard]] inline std::string render_loglog_svg(const SvgPlot& plot) {
    constexpr double width = 880.0, height = 560.0;
    constexpr double margin_left = 80.0, margin_right = 260.0;
    constexpr double margin_top = 48.0, margin_bottom = 64.0;
    const double plot_w = width - margin_left - margin_right;
    const double plot_h = height - margin_top - margin_bottom;

    double lo_x = 0.0, hi_x = 0.0, lo_y = 0.0, hi_y = 0.0;
    bool any = false;
    for (const SvgSeries& s : plot.series) {
        for (const auto& [x, y] : s.points) {
            if (!(x > 0.0) || !(y > 0.0))
                throw std::invalid_argument("render_loglog_svg: nonpositive point in series '" +
                                            s.name + "'");
            const double lx = std::log10(x), ly = std::log10(y);
            if (!any) {
                lo_x = hi_x = lx;
                lo_y = hi_y = ly;
                any = true;
            } else {
                lo_x = std::min(lo_x, lx);
                hi_x = std::max(hi_x, lx);
                lo_y = std::min(lo_y, ly);
                hi_y = std::max(hi_y, ly);
            }
        }
    }
    if (!any)
        throw std::invalid_argument("render_loglog_svg: no data points");
    if (hi_x - lo_x < 1e-9) {
        lo_x -= 0.5;
        hi_x += 0.5;
    }
    if (hi_y - lo_y < 1e-9) {
        lo_y -= 0.5;
        hi_y += 0.5;
    }
    const double pad_x = 0.04 * (hi_x - lo_x), pad_y = 0.06 * (hi_y - lo_y);
    lo_x -= pad_x;
    hi_x += pad_x;
    lo_y -= pad_y;
    hi_y += pad_y;

    const auto to_px_x = [&](double lx) {
        return margin_left + (lx - lo_x) / (hi_x - lo_x) * plot_w;
    };
    const auto to_px_y = [&](double ly) {
        return margin_top + (hi_y - ly) / (hi_y - lo_y) * plot_h;
    };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::svg_coord(width) +
           "\" height=\"" + detail::svg_coord(height) + "\" viewBox=\"0 0 " +
           detail::svg_coord(width) + " " + detail::svg_coord(height) + "\">\n";
    svg += "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "  <text x=\"" + detail::svg_coord(margin_left + plot_w / 2) + "\" y=\"24\" "
           "text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">" +
           detail::xml_escape(plot.title) + "</text>\n";

    // Decade grid + tick labels.
    for (int e = static_cast<int>(std::ceil(lo_x)); e <= static_cast<int>(std::floor(hi_x)); ++e) {
        const double px = to_px_x(e);
        svg += "  <line x1=\"" + detail::svg_coord(px) + "\" y1=\"" +
               detail::svg_coord(margin_top) + "\" x2=\"" + detail::svg_coord(px) + "\" y2=\"" +
               detail::svg_coord(margin_top + plot_h) + "\" stroke=\"#dddddd\"/>\n";
        svg += "  <text x=\"" + detail::svg_coord(px) + "\" y=\"" +
               detail::svg_coord(margin_top + plot_h + 20) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">1e" +
               std::to_string(e) + "</text>\n";
    }
    for (int e = static_cast<int>(std::ceil(lo_y)); e <= static_cast<int>(std::floor(hi_y)); ++e) {
        const double py = to_px_y(e);
        svg += "  <line x1=\"" + detail::svg_coord(margin_left) + "\" y1=\"" +
               detail::svg_coord(py) + "\" x2=\"" + detail::svg_coord(margin_left + plot_w) +
               "\" y2=\"" + detail::svg_coord(py) + "\" stroke=\"#dddddd\"/>\n";
        svg += "  <text x=\"" + detail::svg_coord(margin_left - 8) + "\" y=\"" +
               detail::svg_coord(py + 4) +
               "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">1e" +
               std::to_string(e) + "</text>\n";
    }
    svg += "  <rect x=\"" + detail::svg_coord(margin_left) + "\" y=\"" +
           detail::svg_coord(margin_top) + "\" width=\"" + detail::svg_coord(plot_w) +
           "\" height=\"" + detail::svg_coord(plot_h) + "\" fill=\"none\" stroke=\"black\"/>\n";
    svg += "  <text x=\"" + detail::svg_coord(margin_left + plot_w / 2) + "\" y=\"" +
           detail::svg_coord(height - 16) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">" +
           detail::xml_escape(plot.x_label) + "</text>\n";
    svg += "  <text x=\"20\" y=\"" + detail::svg_coord(margin_top + plot_h / 2) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\" "
           "transform=\"rotate(-90 20 " +
           detail::svg_coord(margin_top + plot_h / 2) + ")\">" +
           detail::xml_escape(plot.y_label) + "</text>\n";

    // Series: polyline plus optional data-carrying markers.
    for (const SvgSeries& s : plot.series) {
        if (s.points.empty())
            continue;
        std::string poly;
        for (const auto& [x, y] : s.points) {
            if (!poly.empty())
                poly.push_back(' ');
            poly += detail::svg_coord(to_px_x(std::log10(x))) + "," +
                    detail::svg_coord(to_px_y(std::log10(y)));
        }
        svg += "  <polyline points=\"" + poly + "\" fill=\"none\" stroke=\"" + s.color +
               "\" stroke-width=\"1.5\"" +
               (s.dash.empty() ? std::string{} : " stroke-dasharray=\"" + s.dash + "\"") +
               "/>\n";
        if (s.markers) {
            for (const auto& [x, y] : s.points) {
                svg += "  <circle cx=\"" + detail::svg_coord(to_px_x(std::log10(x))) +
                       "\" cy=\"" + detail::svg_coord(to_px_y(std::log10(y))) +
                       "\" r=\"3.5\" fill=\"" + s.color + "\" data-series=\"" +
                       detail::xml_escape(s.name) + "\" data-k=\"" +
                       std::to_string(static_cast<std::uint64_t>(std::llround(x))) +
                       "\" data-mean=\"" + format_double(y) + "\"/>\n";
            }
        }
    }

    // Legend, one row per series, in the right margin.
    const double legend_x = margin_left + plot_w + 16.0;
    double legend_y = margin_top + 12.0;
    for (const SvgSeries& s : plot.series) {
        svg += "  <line x1=\"" + detail::svg_coord(legend_x) + "\" y1=\"" +
               detail::svg_coord(legend_y - 4) + "\" x2=\"" + detail::svg_coord(legend_x + 28) +
               "\" y2=\"" + detail::svg_coord(legend_y - 4) + "\" stroke=\"" + s.color +
               "\" stroke-width=\"2\"" +
               (s.dash.empty() ? std::string{} : " stroke-dasharray=\"" + s.dash + "\"") +
               "/>\n";
        svg += "  <text x=\"" + detail::svg_coord(legend_x + 34) + "\" y=\"" +
               detail::svg_coord(legend_y) +
               "\" font-family=\"sans-serif\" font-size=\"12\">" + detail::xml_escape(s.name) +
               "</text>\n";
        legend_y += 17.0;
    }

    svg += "</svg>\n";
    return svg;
}

} // namespace klist
