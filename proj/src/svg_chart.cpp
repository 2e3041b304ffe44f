#include "mortality/svg_chart.hpp"

#include "mortality/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace mortality {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
constexpr int kTicks = 6;

std::string num(double v, const char* fmt = "%.2f") {
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, v);
    return buf;
}

std::string tick_label(double v) {
    if (std::abs(v) < 1e-12) v = 0.0;
    return num(v, "%.6g");
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
        if (!std::isfinite(v)) return;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    void pad_if_flat() {
        if (!std::isfinite(lo)) {
            lo = 0.0;
            hi = 1.0;
        } else if (hi - lo <= 0.0) {
            double d = std::max(0.5, std::abs(lo) * 0.05);
            lo -= d;
            hi += d;
        }
    }
};

}  // namespace

std::string render_line_chart(const std::vector<ChartSeries>& series, const ChartSpec& spec) {
    if (series.empty()) throw DataError("chart needs at least one series");
    Range xr, yr;
    for (const auto& s : series) {
        if (s.xs.size() != s.ys.size() || s.xs.empty()) {
            throw DataError("chart series '" + s.label + "' must have equal, nonzero x/y lengths");
        }
        if ((s.band_lower && s.band_lower->size() != s.xs.size()) ||
            (s.band_upper && s.band_upper->size() != s.xs.size())) {
            throw DataError("chart series '" + s.label + "' band length differs from x length");
        }
        for (double x : s.xs) xr.add(x);
        for (double y : s.ys) yr.add(y);
        if (s.band_lower) for (double y : *s.band_lower) yr.add(y);
        if (s.band_upper) for (double y : *s.band_upper) yr.add(y);
    }
    xr.pad_if_flat();
    yr.pad_if_flat();

    const double left = 80, right = 170, top = 40, bottom = 60;
    const double pw = spec.width - left - right;
    const double ph = spec.height - top - bottom;
    auto sx = [&](double x) { return left + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
    auto sy = [&](double y) { return top + (yr.hi - y) / (yr.hi - yr.lo) * ph; };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << spec.width << "\" height=\"" << spec.height
      << "\" viewBox=\"0 0 " << spec.width << ' ' << spec.height << "\" font-family=\"sans-serif\">\n";
    o << "<rect x=\"0\" y=\"0\" width=\"" << spec.width << "\" height=\"" << spec.height << "\" fill=\"white\"/>\n";
    o << "<text class=\"title\" x=\"" << num(left + pw / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
      << escape(spec.title) << "</text>\n";

    // Axes and ticks.
    o << "<g class=\"axes\" stroke=\"black\" stroke-width=\"1\">\n";
    o << "<line x1=\"" << num(left) << "\" y1=\"" << num(top + ph) << "\" x2=\"" << num(left + pw) << "\" y2=\""
      << num(top + ph) << "\"/>\n";
    o << "<line x1=\"" << num(left) << "\" y1=\"" << num(top) << "\" x2=\"" << num(left) << "\" y2=\""
      << num(top + ph) << "\"/>\n";
    o << "</g>\n<g class=\"ticks\" font-size=\"11\">\n";
    for (int i = 0; i < kTicks; ++i) {
        double xv = xr.lo + (xr.hi - xr.lo) * i / (kTicks - 1);
        double px = sx(xv);
        o << "<line x1=\"" << num(px) << "\" y1=\"" << num(top + ph) << "\" x2=\"" << num(px) << "\" y2=\""
          << num(top + ph + 5) << "\" stroke=\"black\"/>\n";
        o << "<text class=\"xtick\" x=\"" << num(px) << "\" y=\"" << num(top + ph + 18)
          << "\" text-anchor=\"middle\">" << tick_label(xv) << "</text>\n";
        double yv = yr.lo + (yr.hi - yr.lo) * i / (kTicks - 1);
        double py = sy(yv);
        o << "<line x1=\"" << num(left - 5) << "\" y1=\"" << num(py) << "\" x2=\"" << num(left) << "\" y2=\""
          << num(py) << "\" stroke=\"black\"/>\n";
        o << "<text class=\"ytick\" x=\"" << num(left - 8) << "\" y=\"" << num(py + 4)
          << "\" text-anchor=\"end\">" << tick_label(yv) << "</text>\n";
    }
    o << "</g>\n";
    o << "<text class=\"xlabel\" x=\"" << num(left + pw / 2) << "\" y=\"" << num(spec.height - 15.0)
      << "\" text-anchor=\"middle\" font-size=\"13\">" << escape(spec.x_label) << "</text>\n";
    o << "<text class=\"ylabel\" x=\"18\" y=\"" << num(top + ph / 2) << "\" text-anchor=\"middle\" font-size=\"13\""
      << " transform=\"rotate(-90 18 " << num(top + ph / 2) << ")\">" << escape(spec.y_label) << "</text>\n";

    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* color = kPalette[k % std::size(kPalette)];
        if (s.band_lower && s.band_upper) {
            o << "<polygon class=\"band\" fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
            for (std::size_t i = 0; i < s.xs.size(); ++i) {
                o << num(sx(s.xs[i])) << ',' << num(sy((*s.band_upper)[i])) << ' ';
            }
            for (std::size_t i = s.xs.size(); i-- > 0;) {
                o << num(sx(s.xs[i])) << ',' << num(sy((*s.band_lower)[i])) << (i ? " " : "");
            }
            o << "\"/>\n";
        }
        o << "<polyline class=\"series\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.xs.size(); ++i) {
            o << (i ? " " : "") << num(sx(s.xs[i])) << ',' << num(sy(s.ys[i]));
        }
        o << "\"/>\n";
    }

    o << "<g class=\"legend\" font-size=\"12\">\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
        const char* color = kPalette[k % std::size(kPalette)];
        double ly = top + 10 + 18.0 * static_cast<double>(k);
        double lx = left + pw + 15;
        o << "<line x1=\"" << num(lx) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(lx + 20) << "\" y2=\"" << num(ly)
          << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        o << "<text x=\"" << num(lx + 26) << "\" y=\"" << num(ly + 4) << "\">" << escape(series[k].label)
          << "</text>\n";
    }
    o << "</g>\n</svg>\n";
    return o.str();
}

void write_line_chart(const std::vector<ChartSeries>& series, const ChartSpec& spec, const std::string& path) {
    std::string svg = render_line_chart(series, spec);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write chart to '" + path + "'");
    out << svg;
    if (!out) throw DataError("failed writing chart to '" + path + "'");
}

}  // namespace mortality
