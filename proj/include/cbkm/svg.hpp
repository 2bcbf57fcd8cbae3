#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace cbkm {

/// Minimal headless line/scatter plot writer. Output is plain SVG 1.1; the
/// data series are embedded as polyline/circle elements so downstream
/// checks can compare plotted values without rasterizing.
class SvgPlot {
public:
    SvgPlot(std::string title, std::string x_label, std::string y_label)
        : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)) {}

    void add_line(const std::string& label, const std::vector<std::pair<double, double>>& pts,
                  const std::string& color) {
        series_.push_back({label, pts, color, false});
    }
    void add_scatter(const std::string& label, const std::vector<std::pair<double, double>>& pts,
                     const std::string& color) {
        series_.push_back({label, pts, color, true});
    }

    std::string to_string() const {
        double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
        double ymin = xmin, ymax = -xmin;
        for (const auto& s : series_) {
            for (const auto& [x, y] : s.points) {
                xmin = std::min(xmin, x);
                xmax = std::max(xmax, x);
                ymin = std::min(ymin, y);
                ymax = std::max(ymax, y);
            }
        }
        if (!(xmin <= xmax)) { xmin = 0.0; xmax = 1.0; }
        if (!(ymin <= ymax)) { ymin = 0.0; ymax = 1.0; }
        if (xmax == xmin) { xmax += 1.0; xmin -= 1.0; }
        if (ymax == ymin) { ymax += 1.0; ymin -= 1.0; }
        const double ypad = 0.05 * (ymax - ymin);
        ymin -= ypad;
        ymax += ypad;

        const double x0 = 70.0, y0 = 40.0;
        const double pw = width_ - x0 - 30.0, ph = height_ - y0 - 50.0;
        const auto sx = [&](double x) { return x0 + (x - xmin) / (xmax - xmin) * pw; };
        const auto sy = [&](double y) { return y0 + ph - (y - ymin) / (ymax - ymin) * ph; };

        std::ostringstream out;
        out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
        out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width_ << "\" height=\""
            << height_ << "\" viewBox=\"0 0 " << width_ << " " << height_ << "\">\n";
        out << "<rect x=\"0\" y=\"0\" width=\"" << width_ << "\" height=\"" << height_
            << "\" fill=\"white\"/>\n";
        out << "<text x=\"" << width_ / 2 << "\" y=\"24\" text-anchor=\"middle\" "
            << "font-family=\"sans-serif\" font-size=\"15\">" << escape(title_) << "</text>\n";

        // Axes and ticks.
        out << "<rect x=\"" << fmt(x0) << "\" y=\"" << fmt(y0) << "\" width=\"" << fmt(pw)
            << "\" height=\"" << fmt(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";
        for (int i = 0; i <= 5; ++i) {
            const double fx = xmin + (xmax - xmin) * i / 5.0;
            const double fy = ymin + (ymax - ymin) * i / 5.0;
            out << "<line x1=\"" << fmt(sx(fx)) << "\" y1=\"" << fmt(y0 + ph) << "\" x2=\""
                << fmt(sx(fx)) << "\" y2=\"" << fmt(y0 + ph + 5) << "\" stroke=\"black\"/>\n";
            out << "<text x=\"" << fmt(sx(fx)) << "\" y=\"" << fmt(y0 + ph + 18)
                << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
                << fmt(fx) << "</text>\n";
            out << "<line x1=\"" << fmt(x0 - 5) << "\" y1=\"" << fmt(sy(fy)) << "\" x2=\""
                << fmt(x0) << "\" y2=\"" << fmt(sy(fy)) << "\" stroke=\"black\"/>\n";
            out << "<text x=\"" << fmt(x0 - 8) << "\" y=\"" << fmt(sy(fy) + 4)
                << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(fy)
                << "</text>\n";
        }
        out << "<text x=\"" << width_ / 2 << "\" y=\"" << height_ - 8
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
            << escape(x_label_) << "</text>\n";
        out << "<text x=\"16\" y=\"" << height_ / 2
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
            << "transform=\"rotate(-90 16 " << height_ / 2 << ")\">" << escape(y_label_)
            << "</text>\n";

        for (const auto& s : series_) {
            if (s.scatter) {
                out << "<g fill=\"" << s.color << "\" data-series=\"" << escape(s.label)
                    << "\">\n";
                for (const auto& [x, y] : s.points)
                    out << "<circle cx=\"" << fmt(sx(x)) << "\" cy=\"" << fmt(sy(y))
                        << "\" r=\"1.5\"/>\n";
                out << "</g>\n";
            } else {
                out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1\" "
                    << "data-series=\"" << escape(s.label) << "\" points=\"";
                for (const auto& [x, y] : s.points)
                    out << fmt(sx(x)) << "," << fmt(sy(y)) << " ";
                out << "\"/>\n";
            }
        }

        // Legend.
        double ly = y0 + 14.0;
        for (const auto& s : series_) {
            out << "<rect x=\"" << fmt(x0 + pw - 150) << "\" y=\"" << fmt(ly - 9)
                << "\" width=\"10\" height=\"10\" fill=\"" << s.color << "\"/>\n";
            out << "<text x=\"" << fmt(x0 + pw - 135) << "\" y=\"" << fmt(ly)
                << "\" font-family=\"sans-serif\" font-size=\"12\">" << escape(s.label)
                << "</text>\n";
            ly += 16.0;
        }
        out << "</svg>\n";
        return out.str();
    }

private:
    struct Series {
        std::string label;
        std::vector<std::pair<double, double>> points;
        std::string color;
        bool scatter;
    };

    static std::string fmt(double v) {
        char buf[48];
        std::snprintf(buf, sizeof buf, "%.6g", v);
        return buf;
    }

    static std::string escape(const std::string& s) {
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

    std::string title_, x_label_, y_label_;
    int width_ = 900, height_ = 480;
    std::vector<Series> series_;
};

} // namespace cbkm
