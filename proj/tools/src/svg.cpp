#include "mvsde/app/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace mvsde::app {

namespace {

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};

std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", x);
    return buf;
}

std::string tick_label(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '&': out += "&amp;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

struct Axis {
    bool log = false;
    double lo = 0.0;
    double hi = 1.0;

    [[nodiscard]] double map(double v) const { return log ? std::log10(v) : v; }

    // fraction along the axis
    [[nodiscard]] double frac(double v) const { return (map(v) - lo) / (hi - lo); }

    [[nodiscard]] std::vector<double> ticks() const {
        std::vector<double> out;
        if (log) {
            for (double e = std::ceil(lo); e <= hi + 1e-12; e += 1.0) {
                out.push_back(std::pow(10.0, e));
            }
            if (out.size() < 2) {
                out = {std::pow(10.0, lo), std::pow(10.0, hi)};
            }
        } else {
            for (int i = 0; i <= 4; ++i) {
                out.push_back(lo + (hi - lo) * i / 4.0);
            }
        }
        return out;
    }
};

Axis make_axis(const std::vector<double>& values, bool log) {
    Axis a;
    a.log = log;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (double v : values) {
        lo = std::min(lo, a.map(v));
        hi = std::max(hi, a.map(v));
    }
    if (!std::isfinite(lo)) {
        lo = 0.0;
        hi = 1.0;
    }
    if (hi - lo < 1e-12 * std::max(1.0, std::fabs(lo))) {
        lo -= 0.5;
        hi += 0.5;
    }
    const double pad = 0.05 * (hi - lo);
    a.lo = lo - pad;
    a.hi = hi + pad;
    return a;
}

bool usable(double v, bool log) { return std::isfinite(v) && (!log || v > 0.0); }

} // namespace

std::string LineChart::render(int width, int height) const {
    const double left = 80, right = 170, top = 40, bottom = 55;
    const double pw = width - left - right;
    const double ph = height - top - bottom;

    std::vector<double> xs, ys;
    for (const auto& s : series) {
        for (const auto& [x, y] : s.points) {
            if (usable(x, log_x) && usable(y, log_y)) {
                xs.push_back(x);
                ys.push_back(y);
            }
        }
    }
    const Axis ax = make_axis(xs, log_x);
    const Axis ay = make_axis(ys, log_y);
    const auto px = [&](double x) { return left + ax.frac(x) * pw; };
    const auto py = [&](double y) { return top + (1.0 - ay.frac(y)) * ph; };

    std::string out;
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) + "\" height=\"" +
           std::to_string(height) + "\" viewBox=\"0 0 " + std::to_string(width) + " " + std::to_string(height) +
           "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out += "<rect x=\"0\" y=\"0\" width=\"" + std::to_string(width) + "\" height=\"" + std::to_string(height) +
           "\" fill=\"white\"/>\n";
    out += "<text x=\"" + num(left + pw / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" +
           escape(title) + "</text>\n";
    out += "<rect x=\"" + num(left) + "\" y=\"" + num(top) + "\" width=\"" + num(pw) + "\" height=\"" + num(ph) +
           "\" fill=\"none\" stroke=\"black\"/>\n";

    for (double t : ax.ticks()) {
        const double x = px(t);
        out += "<line x1=\"" + num(x) + "\" y1=\"" + num(top + ph) + "\" x2=\"" + num(x) + "\" y2=\"" +
               num(top + ph + 5) + "\" stroke=\"black\"/>\n";
        out += "<text x=\"" + num(x) + "\" y=\"" + num(top + ph + 18) + "\" text-anchor=\"middle\">" +
               tick_label(t) + "</text>\n";
    }
    for (double t : ay.ticks()) {
        const double y = py(t);
        out += "<line x1=\"" + num(left - 5) + "\" y1=\"" + num(y) + "\" x2=\"" + num(left) + "\" y2=\"" + num(y) +
               "\" stroke=\"black\"/>\n";
        out += "<text x=\"" + num(left - 8) + "\" y=\"" + num(y + 4) + "\" text-anchor=\"end\">" + tick_label(t) +
               "</text>\n";
    }
    out += "<text x=\"" + num(left + pw / 2) + "\" y=\"" + num(height - 12.0) + "\" text-anchor=\"middle\">" +
           escape(x_label) + "</text>\n";
    out += "<text x=\"18\" y=\"" + num(top + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " +
           num(top + ph / 2) + ")\">" + escape(y_label) + "</text>\n";

    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& s = series[i];
        const std::string colour = kPalette[i % std::size(kPalette)];
        std::string pts;
        for (const auto& [x, y] : s.points) {
            if (!usable(x, log_x) || !usable(y, log_y)) {
                continue;
            }
            if (!pts.empty()) {
                pts += ' ';
            }
            pts += num(px(x)) + "," + num(py(y));
        }
        out += "<polyline class=\"series\" data-name=\"" + escape(s.name) + "\" fill=\"none\" stroke=\"" + colour +
               "\" stroke-width=\"1.8\"" + (s.dashed ? " stroke-dasharray=\"6 4\"" : "") + " points=\"" + pts +
               "\"/>\n";
        const double ly = top + 14 + 18.0 * static_cast<double>(i);
        out += "<line x1=\"" + num(left + pw + 12) + "\" y1=\"" + num(ly - 4) + "\" x2=\"" + num(left + pw + 36) +
               "\" y2=\"" + num(ly - 4) + "\" stroke=\"" + colour + "\" stroke-width=\"1.8\"" +
               (s.dashed ? " stroke-dasharray=\"6 4\"" : "") + "/>\n";
        out += "<text x=\"" + num(left + pw + 42) + "\" y=\"" + num(ly) + "\">" + escape(s.name) + "</text>\n";
    }
    out += "</svg>\n";
    return out;
}

} // namespace mvsde::app
