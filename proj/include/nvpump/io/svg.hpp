// Copyright 2026 The nvpump Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// svg.hpp: minimal self-contained line plots for sweep tables.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "nvpump/io/csv.hpp"

namespace nvpump::io {

struct SvgSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

struct SvgPlotSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_x = false;
    bool log_y = false;
    double width = 720.0;
    double height = 450.0;
};

namespace detail {

inline std::string fmt(double v, const char* pattern = "%.6g") {
    char buf[48];
    std::snprintf(buf, sizeof buf, pattern, v);
    return buf;
}

inline std::string escape(const std::string& s) {
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

// 1-2-5 tick spacing covering [lo, hi] with about `target` ticks.
inline std::vector<double> linear_ticks(double lo, double hi, int target = 6) {
    const double raw = (hi - lo) / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        step = m * mag;
        if (step >= raw) break;
    }
    std::vector<double> ticks;
    for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * step; t += step)
        ticks.push_back(std::abs(t) < 1e-12 * step ? 0.0 : t);
    return ticks;
}

inline std::vector<double> log_ticks(double lo, double hi) {
    std::vector<double> ticks;
    for (double e = std::floor(lo); e <= std::ceil(hi); e += 1.0)
        if (e >= lo - 1e-12 && e <= hi + 1e-12) ticks.push_back(e);
    return ticks;
}

inline const char* palette(std::size_t i) {
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                   "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
    return colors[i % 10];
}

}  // namespace detail

inline std::string render_svg(const std::vector<SvgSeries>& series, const SvgPlotSpec& spec) {
    const double left = 80.0, right = 170.0, top = 40.0, bottom = 60.0;
    const double pw = spec.width - left - right;
    const double ph = spec.height - top - bottom;

    auto tx = [&](double x) { return spec.log_x ? std::log10(x) : x; };
    auto ty = [&](double y) { return spec.log_y ? std::log10(y) : y; };
    auto usable = [&](double x, double y) {
        return std::isfinite(x) && std::isfinite(y) && (!spec.log_x || x > 0.0) && (!spec.log_y || y > 0.0);
    };

    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const auto& s : series)
        for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
            if (!usable(s.x[i], s.y[i])) continue;
            xmin = std::min(xmin, tx(s.x[i]));
            xmax = std::max(xmax, tx(s.x[i]));
            ymin = std::min(ymin, ty(s.y[i]));
            ymax = std::max(ymax, ty(s.y[i]));
        }
    if (!std::isfinite(xmin)) {
        xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;
    }
    if (xmax == xmin) xmax = xmin + 1.0;
    if (ymax == ymin) {
        ymin -= 0.5;
        ymax += 0.5;
    }
    const double pad = 0.04 * (ymax - ymin);
    ymin -= pad;
    ymax += pad;

    auto px = [&](double x) { return left + (tx(x) - xmin) / (xmax - xmin) * pw; };
    auto py = [&](double y) { return top + (1.0 - (ty(y) - ymin) / (ymax - ymin)) * ph; };
    auto px_raw = [&](double v) { return left + (v - xmin) / (xmax - xmin) * pw; };
    auto py_raw = [&](double v) { return top + (1.0 - (v - ymin) / (ymax - ymin)) * ph; };

    using detail::fmt;
    std::string svg;
    svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(spec.width) + "\" height=\"" +
           fmt(spec.height) + "\" viewBox=\"0 0 " + fmt(spec.width) + " " + fmt(spec.height) +
           "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "<text x=\"" + fmt(left + pw / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" +
           detail::escape(spec.title) + "</text>\n";
    svg += "<rect x=\"" + fmt(left) + "\" y=\"" + fmt(top) + "\" width=\"" + fmt(pw) + "\" height=\"" + fmt(ph) +
           "\" fill=\"none\" stroke=\"black\"/>\n";

    const auto xt = spec.log_x ? detail::log_ticks(xmin, xmax) : detail::linear_ticks(xmin, xmax);
    for (double t : xt) {
        const double x = px_raw(t);
        const std::string label = spec.log_x ? "1e" + fmt(t, "%.0f") : fmt(t);
        svg += "<line x1=\"" + fmt(x) + "\" y1=\"" + fmt(top + ph) + "\" x2=\"" + fmt(x) + "\" y2=\"" +
               fmt(top + ph + 5) + "\" stroke=\"black\"/>\n";
        svg += "<text x=\"" + fmt(x) + "\" y=\"" + fmt(top + ph + 19) + "\" text-anchor=\"middle\">" + label +
               "</text>\n";
    }
    const auto yt = spec.log_y ? detail::log_ticks(ymin, ymax) : detail::linear_ticks(ymin, ymax);
    for (double t : yt) {
        const double y = py_raw(t);
        const std::string label = spec.log_y ? "1e" + fmt(t, "%.0f") : fmt(t);
        svg += "<line x1=\"" + fmt(left - 5) + "\" y1=\"" + fmt(y) + "\" x2=\"" + fmt(left) + "\" y2=\"" + fmt(y) +
               "\" stroke=\"black\"/>\n";
        svg += "<text x=\"" + fmt(left - 8) + "\" y=\"" + fmt(y + 4) + "\" text-anchor=\"end\">" + label +
               "</text>\n";
    }
    svg += "<text x=\"" + fmt(left + pw / 2) + "\" y=\"" + fmt(spec.height - 15) + "\" text-anchor=\"middle\">" +
           detail::escape(spec.x_label) + "</text>\n";
    svg += "<text transform=\"translate(18," + fmt(top + ph / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
           detail::escape(spec.y_label) + "</text>\n";

    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        std::string points;
        for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
            if (!usable(s.x[i], s.y[i])) continue;
            if (!points.empty()) points += ' ';
            points += fmt(px(s.x[i]), "%.2f") + "," + fmt(py(s.y[i]), "%.2f");
        }
        svg += "<polyline fill=\"none\" stroke=\"" + std::string(detail::palette(k)) +
               "\" stroke-width=\"1.6\" points=\"" + points + "\"/>\n";
        const double ly = top + 14.0 + 18.0 * static_cast<double>(k);
        svg += "<line x1=\"" + fmt(left + pw + 12) + "\" y1=\"" + fmt(ly - 4) + "\" x2=\"" + fmt(left + pw + 36) +
               "\" y2=\"" + fmt(ly - 4) + "\" stroke=\"" + detail::palette(k) + "\" stroke-width=\"2\"/>\n";
        svg += "<text x=\"" + fmt(left + pw + 42) + "\" y=\"" + fmt(ly) + "\">" + detail::escape(s.label) +
               "</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

// Plot selected columns of a table against one x column.
inline std::string render_svg(const CsvTable& table, const std::string& x_column,
                              const std::vector<std::string>& y_columns, const SvgPlotSpec& spec) {
    const std::size_t xi = table.column(x_column);
    std::vector<SvgSeries> series;
    for (const auto& name : y_columns) {
        const std::size_t yi = table.column(name);
        SvgSeries s{table.schema[yi].header(), {}, {}};
        for (const auto& row : table.rows) {
            s.x.push_back(row[xi]);
            s.y.push_back(row[yi]);
        }
        series.push_back(std::move(s));
    }
    return render_svg(series, spec);
}

inline void emit_svg_plot(const CsvTable& table, const std::string& x_column, const std::vector<std::string>& y_columns,
                          const SvgPlotSpec& spec, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << render_svg(table, x_column, y_columns, spec);
}

}  // namespace nvpump::io
