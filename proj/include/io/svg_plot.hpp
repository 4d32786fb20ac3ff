#pragma once

#include <string>
#include <utility>
#include <vector>

namespace io {

struct Series {
    std::string label;
    std::vector<std::pair<double, double>> points;
};

// Fixed-size line plot with markers, labeled axes and a legend when several
// series are present. Pure function of its arguments, so identical inputs
// produce identical bytes. Throws when no series has points.
void write_line_plot(const std::string& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<Series>& series);

} // namespace io
