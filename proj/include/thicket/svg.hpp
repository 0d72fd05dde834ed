#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "thicket/errors.hpp"
#include "thicket/io.hpp"

namespace thicket::svg {

// Minimal deterministic SVG writer; text output only, so figures are
// byte-stable and testable.
class Figure {
public:
    Figure(double width, double height) : width_(width), height_(height) {
        body_ += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + io::format_double(width_) +
                 "\" height=\"" + io::format_double(height_) + "\" viewBox=\"0 0 " +
                 io::format_double(width_) + " " + io::format_double(height_) + "\">\n";
        body_ += "<rect x=\"0\" y=\"0\" width=\"" + io::format_double(width_) + "\" height=\"" +
                 io::format_double(height_) + "\" fill=\"white\"/>\n";
    }

    void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& stroke,
                  double stroke_width, const std::string& dasharray = "", double opacity = 1.0) {
        if (pts.empty()) return;
        body_ += "<polyline fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"" +
                 io::format_double(stroke_width) + "\"";
        if (!dasharray.empty()) body_ += " stroke-dasharray=\"" + dasharray + "\"";
        if (opacity != 1.0) body_ += " stroke-opacity=\"" + io::format_double(opacity) + "\"";
        body_ += " points=\"";
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (i) body_ += ' ';
            body_ += io::format_double(pts[i].first) + "," + io::format_double(pts[i].second);
        }
        body_ += "\"/>\n";
    }

    void circle(double cx, double cy, double r, const std::string& fill, double opacity = 1.0) {
        body_ += "<circle cx=\"" + io::format_double(cx) + "\" cy=\"" + io::format_double(cy) +
                 "\" r=\"" + io::format_double(r) + "\" fill=\"" + fill + "\"";
        if (opacity != 1.0) body_ += " fill-opacity=\"" + io::format_double(opacity) + "\"";
        body_ += "/>\n";
    }

    void rect(double x, double y, double w, double h, const std::string& fill) {
        body_ += "<rect x=\"" + io::format_double(x) + "\" y=\"" + io::format_double(y) +
                 "\" width=\"" + io::format_double(w) + "\" height=\"" + io::format_double(h) +
                 "\" fill=\"" + fill + "\"/>\n";
    }

    void line(double x1, double y1, double x2, double y2, const std::string& stroke,
              double stroke_width = 1.0) {
        body_ += "<line x1=\"" + io::format_double(x1) + "\" y1=\"" + io::format_double(y1) +
                 "\" x2=\"" + io::format_double(x2) + "\" y2=\"" + io::format_double(y2) +
                 "\" stroke=\"" + stroke + "\" stroke-width=\"" + io::format_double(stroke_width) +
                 "\"/>\n";
    }

    void text(double x, double y, const std::string& content, double size = 12.0,
              const std::string& fill = "black") {
        body_ += "<text x=\"" + io::format_double(x) + "\" y=\"" + io::format_double(y) +
                 "\" font-family=\"monospace\" font-size=\"" + io::format_double(size) +
                 "\" fill=\"" + fill + "\">" + escape(content) + "</text>\n";
    }

    std::string finish() const { return body_ + "</svg>\n"; }

    static std::string escape(const std::string& s) {
        std::string out;
        for (char c : s) {
            switch (c) {
                case '&': out += "&amp;"; break;
                case '<': out += "&lt;"; break;
                case '>': out += "&gt;"; break;
                default: out += c;
            }
        }
        return out;
    }

private:
    double width_;
    double height_;
    std::string body_;
};

// Maps data coordinates into a margin-padded viewport, y flipped.
struct Axes {
    double x_lo = 0.0, x_hi = 1.0, y_lo = 0.0, y_hi = 1.0;
    double width = 640.0, height = 400.0, margin = 40.0;

    static Axes fit(const std::vector<std::pair<double, double>>& pts, double width = 640.0,
                    double height = 400.0) {
        Axes ax;
        ax.width = width;
        ax.height = height;
        if (pts.empty()) return ax;
        ax.x_lo = ax.y_lo = std::numeric_limits<double>::infinity();
        ax.x_hi = ax.y_hi = -std::numeric_limits<double>::infinity();
        for (const auto& [x, y] : pts) {
            ax.x_lo = std::min(ax.x_lo, x);
            ax.x_hi = std::max(ax.x_hi, x);
            ax.y_lo = std::min(ax.y_lo, y);
            ax.y_hi = std::max(ax.y_hi, y);
        }
        if (ax.x_hi == ax.x_lo) ax.x_hi = ax.x_lo + 1.0;
        if (ax.y_hi == ax.y_lo) ax.y_hi = ax.y_lo + 1.0;
        return ax;
    }

    void expand(const std::vector<std::pair<double, double>>& pts) {
        for (const auto& [x, y] : pts) {
            x_lo = std::min(x_lo, x);
            x_hi = std::max(x_hi, x);
            y_lo = std::min(y_lo, y);
            y_hi = std::max(y_hi, y);
        }
        if (x_hi == x_lo) x_hi = x_lo + 1.0;
        if (y_hi == y_lo) y_hi = y_lo + 1.0;
    }

    std::pair<double, double> to_view(double x, double y) const {
        const double vx = margin + (x - x_lo) / (x_hi - x_lo) * (width - 2.0 * margin);
        const double vy = height - margin - (y - y_lo) / (y_hi - y_lo) * (height - 2.0 * margin);
        return {vx, vy};
    }

    std::vector<std::pair<double, double>> map(
        const std::vector<std::pair<double, double>>& pts) const {
        std::vector<std::pair<double, double>> out;
        out.reserve(pts.size());
        for (const auto& [x, y] : pts) out.push_back(to_view(x, y));
        return out;
    }
};

}  // namespace thicket::svg
