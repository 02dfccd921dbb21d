#pragma once

#include <string>
#include <utility>
#include <vector>

namespace mvsde::app {

struct Series {
    std::string name;
    std::vector<std::pair<double, double>> points;
    bool dashed = false;
};

/// Minimal line chart. Output depends only on the inputs, so plots diff cleanly.
struct LineChart {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_x = false;
    bool log_y = false;
    std::vector<Series> series;

    /// Points that are non-finite, or non-positive on a log axis, are dropped.
    [[nodiscard]] std::string render(int width = 720, int height = 480) const;
};

} // namespace mvsde::app
