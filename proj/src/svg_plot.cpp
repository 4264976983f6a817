#include "stein/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "stein/errors.hpp"

namespace stein {

namespace {

constexpr double kWidth = 760, kHeight = 480;
constexpr double kLeft = 80, kRight = 600, kTop = 30, kBottom = 425;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string num(double v) { return format_double(v, 6); }

}  // namespace

std::string render_ksd_plot(const std::vector<RunRecord>& records) {
    std::map<std::string, std::map<int, std::vector<double>>> by_method;  // method -> N -> ksds
    std::set<int> n_values;
    double y_min = std::numeric_limits<double>::infinity();
    double y_max = 0.0;
    for (const auto& r : records) {
        if (r.status != "ok") continue;
        const double ksd = std::max(r.ksd, 1e-300);
        by_method[r.method][r.n].push_back(ksd);
        n_values.insert(r.n);
        y_min = std::min(y_min, ksd);
        y_max = std::max(y_max, ksd);
    }
    if (by_method.empty()) throw ConfigError("no successful records to plot");
    if (y_min == y_max) {
        y_min /= 2.0;
        y_max *= 2.0;
    }

    const int x_lo = *n_values.begin();
    const int x_hi = *n_values.rbegin();
    const double ly_lo = std::log10(y_min);
    const double ly_hi = std::log10(y_max);

    auto x_of = [&](double n) {
        if (x_hi == x_lo) return (kLeft + kRight) / 2.0;
        return kLeft + (n - x_lo) / (x_hi - x_lo) * (kRight - kLeft);
    };
    auto y_of = [&](double ksd) {
        return kBottom - (std::log10(ksd) - ly_lo) / (ly_hi - ly_lo) * (kBottom - kTop);
    };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" +
           num(kHeight) + "\" viewBox=\"0 0 " + num(kWidth) + " " + num(kHeight) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    // axes
    svg += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kBottom) + "\" x2=\"" + num(kRight) +
           "\" y2=\"" + num(kBottom) + "\" stroke=\"black\"/>\n";
    svg += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop) + "\" x2=\"" + num(kLeft) +
           "\" y2=\"" + num(kBottom) + "\" stroke=\"black\"/>\n";

    // x ticks at every N present
    for (int n : n_values) {
        const double x = x_of(n);
        svg += "<line x1=\"" + num(x) + "\" y1=\"" + num(kBottom) + "\" x2=\"" + num(x) +
               "\" y2=\"" + num(kBottom + 5) + "\" stroke=\"black\"/>\n";
        svg += "<text x=\"" + num(x) + "\" y=\"" + num(kBottom + 18) +
               "\" font-size=\"11\" text-anchor=\"middle\">" + std::to_string(n) + "</text>\n";
    }

    // y ticks at powers of ten spanning the data
    const int decade_lo = static_cast<int>(std::floor(ly_lo));
    const int decade_hi = static_cast<int>(std::ceil(ly_hi));
    const int stride = std::max(1, (decade_hi - decade_lo) / 10);
    for (int decade = decade_lo; decade <= decade_hi; decade += stride) {
        const double value = std::pow(10.0, decade);
        const double y = y_of(std::min(std::max(value, y_min), y_max));
        if (y < kTop - 1 || y > kBottom + 1) continue;
        svg += "<line x1=\"" + num(kLeft - 5) + "\" y1=\"" + num(y) + "\" x2=\"" + num(kLeft) +
               "\" y2=\"" + num(y) + "\" stroke=\"black\"/>\n";
        svg += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(y) + "\" x2=\"" + num(kRight) +
               "\" y2=\"" + num(y) + "\" stroke=\"#dddddd\"/>\n";
        svg += "<text x=\"" + num(kLeft - 8) + "\" y=\"" + num(y + 4) +
               "\" font-size=\"11\" text-anchor=\"end\">1e" + std::to_string(decade) +
               "</text>\n";
    }

    // axis labels
    svg += "<text x=\"" + num((kLeft + kRight) / 2) + "\" y=\"" + num(kHeight - 12) +
           "\" font-size=\"13\" text-anchor=\"middle\">N</text>\n";
    svg += "<text x=\"18\" y=\"" + num((kTop + kBottom) / 2) +
           "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 " +
           num((kTop + kBottom) / 2) + ")\">KSD</text>\n";

    // per-method scatter and median polyline; legend down the right margin
    std::size_t color_index = 0;
    double legend_y = kTop + 10;
    for (const auto& [method, per_n] : by_method) {
        const char* color = kPalette[color_index % (sizeof(kPalette) / sizeof(kPalette[0]))];
        ++color_index;

        for (const auto& [n, ksds] : per_n) {
            for (double ksd : ksds) {
                svg += "<circle cx=\"" + num(x_of(n)) + "\" cy=\"" + num(y_of(ksd)) +
                       "\" r=\"2.5\" fill=\"" + color + "\" fill-opacity=\"0.45\"/>\n";
            }
        }

        std::string path_points;
        for (const auto& [n, ksds] : per_n) {
            const double med = median_of(ksds);
            if (!path_points.empty()) path_points += " ";
            path_points += num(x_of(n)) + "," + num(y_of(med));
        }
        svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
               "\" stroke-width=\"1.8\" points=\"" + path_points + "\"/>\n";

        svg += "<line x1=\"" + num(kRight + 14) + "\" y1=\"" + num(legend_y) + "\" x2=\"" +
               num(kRight + 38) + "\" y2=\"" + num(legend_y) + "\" stroke=\"" + color +
               "\" stroke-width=\"1.8\"/>\n";
        svg += "<text x=\"" + num(kRight + 44) + "\" y=\"" + num(legend_y + 4) +
               "\" font-size=\"12\">" + method + "</text>\n";
        legend_y += 18;
    }

    svg += "</svg>\n";
    return svg;
}

}  // namespace stein
