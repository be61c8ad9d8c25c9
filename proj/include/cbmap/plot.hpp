#pragma once

// Static SVG scatter plots of 2-D embeddings.

#include "cbmap/kmeans.hpp"
#include "cbmap/linalg.hpp"

#include <array>
#include <cstdio>
#include <map>
#include <optional>
#include <string>

namespace cbmap {

/// Paul Tol's "muted" scheme plus pale grey; safe for common colour-vision deficiencies.
inline constexpr std::array<const char*, 10> kPalette = {
    "#332288", "#88CCEE", "#44AA99", "#117733", "#999933",
    "#DDCC77", "#CC6677", "#882255", "#AA4499", "#DDDDDD",
};

struct PlotBounds {
    double x_min, y_min, width, height;
};

/// Data range padded by 5% on each side. Degenerate ranges get unit width.
inline PlotBounds plot_bounds(const Matrix& y) {
    auto axis = [&](Index c, double& lo, double& span) {
        const double mn = y.col(c).minCoeff();
        const double mx = y.col(c).maxCoeff();
        double range = mx - mn;
        double base = mn;
        if (!(range > 0.0)) {
            range = 1.0;
            base = mn - 0.5;
        }
        lo = base - 0.05 * range;
        span = 1.1 * range;
    };
    PlotBounds b{};
    axis(0, b.x_min, b.width);
    axis(1, b.y_min, b.height);
    return b;
}

inline std::string scatter_svg(const Matrix& y, const std::optional<Labels>& labels, const std::string& title = "") {
    if (y.rows() < 1) throw std::invalid_argument("scatter_svg: embedding is empty");
    if (y.cols() != 2) {
        throw std::invalid_argument("scatter_svg: embedding has " + std::to_string(y.cols()) +
                                    " columns; plotting needs a 2-D fit (--dim 2)");
    }
    if (labels && static_cast<Index>(labels->size()) != y.rows()) {
        throw std::invalid_argument("scatter_svg: label count does not match embedding rows");
    }
    const PlotBounds b = plot_bounds(y);
    const double longest = std::max(b.width, b.height);
    const double px_w = 800.0 * b.width / longest;
    const double px_h = 800.0 * b.height / longest;
    const double radius = 0.004 * longest;
    // SVG y grows downward; mirror so that larger values sit higher.
    const double y_flip = 2.0 * b.y_min + b.height;

    std::map<int, std::string> groups;
    char buf[128];
    for (Index i = 0; i < y.rows(); ++i) {
        const int key = labels ? (*labels)[static_cast<std::size_t>(i)] : 0;
        std::snprintf(buf, sizeof buf, "<circle cx=\"%.6g\" cy=\"%.6g\" r=\"%.4g\"/>\n", y(i, 0), y_flip - y(i, 1),
                      radius);
        groups[key] += buf;
    }

    std::string svg = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    char head[512];
    std::snprintf(head, sizeof head,
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" "
                  "viewBox=\"%.17g %.17g %.17g %.17g\">\n",
                  px_w, px_h, b.x_min, b.y_min, b.width, b.height);
    svg += head;
    if (!title.empty()) {
        std::string escaped;
        for (char ch : title) {
            if (ch == '<') escaped += "&lt;";
            else if (ch == '>') escaped += "&gt;";
            else if (ch == '&') escaped += "&amp;";
            else escaped += ch;
        }
        svg += "<title>" + escaped + "</title>\n";
    }
    std::size_t slot = 0;
    for (const auto& [label, circles] : groups) {
        svg += "<g class=\"label-" + std::to_string(label) + "\" fill=\"" + kPalette[slot % kPalette.size()] +
               "\" fill-opacity=\"0.8\">\n" + circles + "</g>\n";
        ++slot;
    }
    svg += "</svg>\n";
    return svg;
}

}  // namespace cbmap
