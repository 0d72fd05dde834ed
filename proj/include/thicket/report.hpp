#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "thicket/commands.hpp"
#include "thicket/errors.hpp"
#include "thicket/io.hpp"
#include "thicket/manifest.hpp"
#include "thicket/svg.hpp"

namespace thicket::cli {

namespace detail {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

inline Table read_table(const fs::path& path) {
    Table t;
    const auto lines = io::read_lines(io::read_text_file(path));
    if (lines.empty()) throw config_error("report: empty csv: " + path.string());
    t.header = io::split(lines[0], ',');
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const auto fields = io::split(lines[i], ',');
        std::vector<double> row;
        row.reserve(fields.size());
        for (const auto& f : fields) row.push_back(io::parse_double(f));
        t.rows.push_back(std::move(row));
    }
    return t;
}

inline std::vector<std::pair<double, double>> column_curve(const Table& t, std::size_t x_col,
                                                           std::size_t y_col) {
    std::vector<std::pair<double, double>> pts;
    pts.reserve(t.rows.size());
    for (const auto& row : t.rows) pts.emplace_back(row[x_col], row[y_col]);
    return pts;
}

}  // namespace detail

// The continuation figure: ground truth (context joined with the true
// continuation) in blue, base rollout in black, selected rollouts in red.
// Polyline count is exactly 2 + K.
inline std::string rollout_figure(const fs::path& dir) {
    const auto ctx = detail::read_table(dir / "context.csv");     // t,x,value
    const auto rolls = detail::read_table(dir / "rollouts.csv");  // t,x,truth,base,ensemble,member_*

    std::vector<std::pair<double, double>> truth;
    for (const auto& row : ctx.rows) truth.emplace_back(row[1], row[2]);
    for (const auto& row : rolls.rows) truth.emplace_back(row[1], row[2]);

    svg::Figure fig(640.0, 400.0);
    auto ax = svg::Axes::fit(truth, 640.0, 400.0);
    const auto base = detail::column_curve(rolls, 1, 3);
    ax.expand(base);
    std::vector<std::vector<std::pair<double, double>>> members;
    for (std::size_t col = 5; col < rolls.header.size(); ++col) {
        members.push_back(detail::column_curve(rolls, 1, col));
        ax.expand(members.back());
    }
    for (const auto& memb : members) fig.polyline(ax.map(memb), "red", 1.0, "", 0.75);
    fig.polyline(ax.map(base), "black", 1.5);
    fig.polyline(ax.map(truth), "blue", 1.5, "6,3");
    return fig.finish();
}

inline std::string es_curve_figure(const fs::path& dir) {
    const auto t = detail::read_table(dir / "score_curve.csv");
    svg::Figure fig(640.0, 400.0);
    const auto curve = detail::column_curve(t, 0, 1);
    const auto ax = svg::Axes::fit(curve, 640.0, 400.0);
    fig.polyline(ax.map(curve), "green", 1.5);
    fig.text(10.0, 16.0, "training score per iteration", 10.0);
    return fig.finish();
}

inline std::string heatmap_figure(const fs::path& dir) {
    const auto t = detail::read_table(dir / "heatmap.csv");
    double lo = t.rows[0][1];
    double hi = lo;
    for (const auto& row : t.rows)
        for (std::size_t j = 1; j < row.size(); ++j) {
            lo = std::min(lo, row[j]);
            hi = std::max(hi, row[j]);
        }
    const double cell_w = 80.0;
    const double cell_h = 40.0;
    svg::Figure fig(120.0 + cell_w * static_cast<double>(t.header.size() - 1),
                    80.0 + cell_h * static_cast<double>(t.rows.size()));
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        for (std::size_t j = 1; j < t.rows[i].size(); ++j) {
            const double v = t.rows[i][j];
            const double f = hi > lo ? (v - lo) / (hi - lo) : 0.5;
            char color[8];
            std::snprintf(color, sizeof(color), "#%02x%02x%02x",
                          static_cast<int>(255.0 * f), 64, static_cast<int>(255.0 * (1.0 - f)));
            fig.rect(100.0 + cell_w * static_cast<double>(j - 1),
                     40.0 + cell_h * static_cast<double>(i), cell_w, cell_h, color);
        }
        fig.text(10.0, 65.0 + cell_h * static_cast<double>(i),
                 "N=" + io::format_double(t.rows[i][0]));
    }
    for (std::size_t j = 1; j < t.header.size(); ++j)
        fig.text(100.0 + cell_w * static_cast<double>(j - 1) + 10.0, 30.0, t.header[j]);
    return fig.finish();
}

// Renders figures for each stored manifest next to it; pure function of the
// stored CSV artifacts, so re-rendering is byte-identical.
inline std::vector<fs::path> cmd_report(const std::vector<fs::path>& manifest_paths) {
    if (manifest_paths.empty())
        throw config_error(
            "report: no manifests given\nusage: thicket report MANIFEST.json [MANIFEST.json ...]");
    std::vector<fs::path> written;
    for (const auto& path : manifest_paths) {
        const auto m = manifest::load(path);
        const fs::path dir = path.parent_path().empty() ? fs::path(".") : path.parent_path();
        auto emit = [&](const std::string& name, const std::string& content) {
            io::write_text_file(dir / name, content);
            written.push_back(dir / name);
        };
        if (m.command == "randopt" || m.command == "distill") {
            if (m.artifacts.count("rollouts.csv")) emit("report_rollout.svg", rollout_figure(dir));
        } else if (m.command == "es") {
            emit("report_es_curve.svg", es_curve_figure(dir));
        } else if (m.command == "landscape") {
            emit("report_density.svg", density_svg(io::read_text_file(dir / "density_profile.csv")));
            const auto scores = serialize::score_matrix_from_csv(io::read_text_file(dir / "scores.csv"));
            emit("report_spectra.svg", spectra_svg(scores));
            const auto coords_table = detail::read_table(dir / "coords.csv");
            std::vector<std::pair<double, double>> coords;
            for (const auto& row : coords_table.rows) coords.emplace_back(row[3], row[4]);
            emit("report_scatter.svg", scatter_svg(scores, coords));
        } else if (m.command == "scaling") {
            emit("report_heatmap.svg", heatmap_figure(dir));
        } else if (m.command == "pretrain") {
            const auto t = detail::read_table(dir / "loss_curve.csv");
            svg::Figure fig(640.0, 400.0);
            if (!t.rows.empty()) {
                const auto curve = detail::column_curve(t, 0, 1);
                const auto ax = svg::Axes::fit(curve, 640.0, 400.0);
                fig.polyline(ax.map(curve), "black", 1.5);
            }
            fig.text(10.0, 16.0, "pretraining loss", 10.0);
            emit("report_loss.svg", fig.finish());
        } else {
            throw config_error("report: unknown manifest command: " + m.command);
        }
    }
    return written;
}

}  // namespace thicket::cli
