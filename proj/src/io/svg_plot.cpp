#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "io/csv.hpp"
#include "io/svg_plot.hpp"

namespace io {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

constexpr double kWidth = 640, kHeight = 440;
constexpr double kLeft = 70, kRight = 24, kTop = 44, kBottom = 58;

std::string escape(const std::string& s) {
    std::string out;
    for (char ch : s) {
        if (ch == '&') out += "&amp;";
        else if (ch == '<') out += "&lt;";
        else if (ch == '>') out += "&gt;";
        else out.push_back(ch);
    }
    return out;
}

struct Axis {
    double lo = 0, hi = 1;
    std::vector<double> ticks;
};

Axis nice_axis(double lo, double hi) {
    if (!(hi > lo)) {
        lo -= 1;
        hi += 1;
    }
    const double raw_step = (hi - lo) / 4;
    const double mag = std::pow(10.0, std::floor(std::log10(raw_step)));
    double step = 10 * mag;
    for (double mult : {1.0, 2.0, 2.5, 5.0}) {
        if (mult * mag >= raw_step) {
            step = mult * mag;
            break;
        }
    }
    Axis axis;
    axis.lo = std::floor(lo / step) * step;
    axis.hi = std::ceil(hi / step) * step;
    for (double t = axis.lo; t <= axis.hi + step / 2; t += step) {
        // snap near-integer ticks so labels stay short
        const double snapped = std::round(t / step) * step;
        axis.ticks.push_back(std::abs(snapped) < step * 1e-9 ? 0.0 : snapped);
    }
    return axis;
}

std::string fmt(double x) {
    std::ostringstream out;
    out.precision(6);
    out << x;
    return out.str();
}

} // namespace

void write_line_plot(const std::string& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<Series>& series) {
    double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
    bool any = false;
    for (const auto& s : series)
        for (const auto& [x, y] : s.points) {
            if (!any) {
                xmin = xmax = x;
                ymin = ymax = y;
                any = true;
            }
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    if (!any) throw std::invalid_argument("write_line_plot: no points");

    const Axis xa = nice_axis(xmin, xmax);
    const Axis ya = nice_axis(ymin, ymax);
    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;
    auto px = [&](double x) { return kLeft + (x - xa.lo) / (xa.hi - xa.lo) * plot_w; };
    auto py = [&](double y) { return kHeight - kBottom - (y - ya.lo) / (ya.hi - ya.lo) * plot_h; };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
    svg << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
    svg << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"16\">" << escape(title) << "</text>\n";

    for (double t : xa.ticks) {
        const double x = px(t);
        svg << "<line x1=\"" << fmt(x) << "\" y1=\"" << kTop << "\" x2=\"" << fmt(x) << "\" y2=\""
            << kHeight - kBottom << "\" stroke=\"#dddddd\"/>\n";
        svg << "<text x=\"" << fmt(x) << "\" y=\"" << kHeight - kBottom + 18
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(t)
            << "</text>\n";
    }
    for (double t : ya.ticks) {
        const double y = py(t);
        svg << "<line x1=\"" << kLeft << "\" y1=\"" << fmt(y) << "\" x2=\"" << kWidth - kRight
            << "\" y2=\"" << fmt(y) << "\" stroke=\"#dddddd\"/>\n";
        svg << "<text x=\"" << kLeft - 6 << "\" y=\"" << fmt(y + 4)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(t)
            << "</text>\n";
    }
    svg << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << plot_w << "\" height=\""
        << plot_h << "\" fill=\"none\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 14
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
        << escape(x_label) << "</text>\n";
    svg << "<text x=\"18\" y=\"" << kTop + plot_h / 2
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
        << "transform=\"rotate(-90 18 " << kTop + plot_h / 2 << ")\">" << escape(y_label)
        << "</text>\n";

    for (size_t s = 0; s < series.size(); ++s) {
        const char* color = kPalette[s % (sizeof(kPalette) / sizeof(kPalette[0]))];
        if (series[s].points.size() > 1) {
            svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
            for (const auto& [x, y] : series[s].points) svg << fmt(px(x)) << "," << fmt(py(y)) << " ";
            svg << "\"/>\n";
        }
        for (const auto& [x, y] : series[s].points)
            svg << "<circle cx=\"" << fmt(px(x)) << "\" cy=\"" << fmt(py(y))
                << "\" r=\"3.5\" fill=\"" << color << "\"/>\n";
    }
    if (series.size() > 1) {
        for (size_t s = 0; s < series.size(); ++s) {
            const char* color = kPalette[s % (sizeof(kPalette) / sizeof(kPalette[0]))];
            const double y = kTop + 14 + 16 * static_cast<double>(s);
            svg << "<rect x=\"" << kLeft + plot_w - 130 << "\" y=\"" << fmt(y - 9)
                << "\" width=\"10\" height=\"10\" fill=\"" << color << "\"/>\n";
            svg << "<text x=\"" << kLeft + plot_w - 116 << "\" y=\"" << fmt(y)
                << "\" font-family=\"sans-serif\" font-size=\"11\">" << escape(series[s].label)
                << "</text>\n";
        }
    }
    svg << "</svg>\n";

    std::ofstream file(path, std::ios::binary);
    if (!file) throw std::runtime_error("write_line_plot: cannot open " + path);
    file << svg.str();
    if (!file) throw std::runtime_error("write_line_plot: write failed " + path);
}

} // namespace io
