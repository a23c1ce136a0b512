#pragma once

// Log-log convergence plot: error points joined by a polyline, plus a red
// reference line of slope -1/2 through the first point.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace acir {

struct LogLogPlot {
    std::string title;
    std::vector<std::pair<double, double>> points;  // (n, error)
    double reference_slope = 0.5;
    int width = 640;
    int height = 480;
};

namespace detail {
inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline std::string escape_xml(const std::string& s) {
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
}  // namespace detail

inline std::string render_loglog_svg(const LogLogPlot& plot) {
    using detail::num;
    if (plot.points.empty()) throw std::invalid_argument("render_loglog_svg: no points");
    for (auto [n, e] : plot.points)
        if (!(n > 0.0) || !(e > 0.0) || !std::isfinite(e))
            throw std::invalid_argument("render_loglog_svg: points must be positive and finite");

    const double n0 = plot.points.front().first, e0 = plot.points.front().second;
    auto reference = [&](double n) { return e0 * std::pow(n / n0, -plot.reference_slope); };

    double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
    for (auto [n, e] : plot.points) {
        xmin = std::min(xmin, std::log10(n));
        xmax = std::max(xmax, std::log10(n));
        ymin = std::min({ymin, std::log10(e), std::log10(reference(n))});
        ymax = std::max({ymax, std::log10(e), std::log10(reference(n))});
    }
    const double xpad = std::max(0.05, 0.05 * (xmax - xmin));
    const double ypad = std::max(0.05, 0.05 * (ymax - ymin));
    xmin -= xpad; xmax += xpad; ymin -= ypad; ymax += ypad;

    const double left = 80, right = 20, top = 40, bottom = 60;
    const double pw = plot.width - left - right, ph = plot.height - top - bottom;
    auto px = [&](double n) { return left + (std::log10(n) - xmin) / (xmax - xmin) * pw; };
    auto py = [&](double e) { return top + (ymax - std::log10(e)) / (ymax - ymin) * ph; };

    std::string s;
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(plot.width) +
         "\" height=\"" + std::to_string(plot.height) + "\" viewBox=\"0 0 " +
         std::to_string(plot.width) + " " + std::to_string(plot.height) + "\">\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s += "<text x=\"" + num(left + pw / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" +
         detail::escape_xml(plot.title) + "</text>\n";
    s += "<rect x=\"" + num(left) + "\" y=\"" + num(top) + "\" width=\"" + num(pw) + "\" height=\"" +
         num(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";

    // x ticks at the grid sizes, y ticks at decades and their 2x/5x multiples
    for (auto [n, e] : plot.points) {
        s += "<line x1=\"" + num(px(n)) + "\" y1=\"" + num(top + ph) + "\" x2=\"" + num(px(n)) +
             "\" y2=\"" + num(top + ph + 5) + "\" stroke=\"black\"/>\n";
        s += "<text x=\"" + num(px(n)) + "\" y=\"" + num(top + ph + 20) +
             "\" text-anchor=\"middle\" font-size=\"11\">" + num(n).substr(0, num(n).find('.')) +
             "</text>\n";
    }
    for (int dec = static_cast<int>(std::floor(ymin)); dec <= static_cast<int>(std::ceil(ymax)); ++dec) {
        for (double mult : {1.0, 2.0, 5.0}) {
            const double v = mult * std::pow(10.0, dec);
            if (std::log10(v) < ymin || std::log10(v) > ymax) continue;
            char label[32];
            std::snprintf(label, sizeof label, "%.0e", v);
            s += "<line x1=\"" + num(left - 5) + "\" y1=\"" + num(py(v)) + "\" x2=\"" + num(left) +
                 "\" y2=\"" + num(py(v)) + "\" stroke=\"black\"/>\n";
            s += "<text x=\"" + num(left - 8) + "\" y=\"" + num(py(v) + 4) +
                 "\" text-anchor=\"end\" font-size=\"11\">" + label + "</text>\n";
        }
    }
    s += "<text x=\"" + num(left + pw / 2) + "\" y=\"" + num(plot.height - 15.0) +
         "\" text-anchor=\"middle\" font-size=\"12\">n (log scale)</text>\n";
    s += "<text x=\"18\" y=\"" + num(top + ph / 2) + "\" text-anchor=\"middle\" font-size=\"12\" "
         "transform=\"rotate(-90 18 " + num(top + ph / 2) + ")\">E|X(2n) - X(n)| (log scale)</text>\n";

    const double nlast = plot.points.back().first;
    s += "<line class=\"reference\" x1=\"" + num(px(n0)) + "\" y1=\"" + num(py(reference(n0))) +
         "\" x2=\"" + num(px(nlast)) + "\" y2=\"" + num(py(reference(nlast))) +
         "\" stroke=\"red\" stroke-width=\"1.5\"/>\n";

    s += "<polyline class=\"data\" fill=\"none\" stroke=\"blue\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < plot.points.size(); ++i) {
        if (i) s += ' ';
        s += num(px(plot.points[i].first)) + "," + num(py(plot.points[i].second));
    }
    s += "\"/>\n";
    for (auto [n, e] : plot.points)
        s += "<circle cx=\"" + num(px(n)) + "\" cy=\"" + num(py(e)) + "\" r=\"3\" fill=\"blue\"/>\n";
    s += "</svg>\n";
    return s;
}

}  // namespace acir
