#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "thicket/errors.hpp"
#include "thicket/io.hpp"
#include "thicket/landscape.hpp"
#include "thicket/perturb.hpp"
#include "thicket/signals.hpp"

namespace thicket::serialize {

using json = nlohmann::ordered_json;

inline json to_json(const signals::FunctionSpec& spec) {
    json j;
    j["family"] = signals::to_string(spec.family);
    j["params"] = spec.params;
    return j;
}

inline signals::FunctionSpec function_spec_from_json(const json& j) {
    signals::FunctionSpec spec;
    spec.family = signals::family_from_string(j.at("family").get<std::string>());
    spec.params = j.at("params").get<std::vector<double>>();
    spec.validate();
    return spec;
}

inline json to_json(const signals::MixtureSpec& mixture) {
    json j;
    json families = json::array();
    json ranges = json::object();
    for (auto f : mixture.families) {
        families.push_back(signals::to_string(f));
        json r = json::array();
        for (const auto& range : mixture.ranges.at(f)) r.push_back({range.lo, range.hi});
        ranges[signals::to_string(f)] = std::move(r);
    }
    j["families"] = std::move(families);
    j["ranges"] = std::move(ranges);
    return j;
}

inline signals::MixtureSpec mixture_from_json(const json& j) {
    signals::MixtureSpec mixture;
    for (const auto& name : j.at("families")) {
        const auto family = signals::family_from_string(name.get<std::string>());
        mixture.families.push_back(family);
        std::vector<signals::ParamRange> ranges;
        for (const auto& pair : j.at("ranges").at(signals::to_string(family)))
            ranges.push_back({pair.at(0).get<double>(), pair.at(1).get<double>()});
        mixture.ranges[family] = std::move(ranges);
    }
    mixture.validate();
    return mixture;
}

inline json to_json(const signals::Grid& grid) {
    return json{{"x0", grid.x0}, {"dx", grid.dx}, {"n_points", grid.n_points}};
}

inline signals::Grid grid_from_json(const json& j) {
    signals::Grid grid;
    grid.x0 = j.at("x0").get<double>();
    grid.dx = j.at("dx").get<double>();
    grid.n_points = j.at("n_points").get<int>();
    grid.validate();
    return grid;
}

// Dataset CSV: one row per item, context values then target. The provenance
// (mixture, seed, grid) travels in a JSON sidecar next to the CSV.
inline std::filesystem::path sidecar_path(const std::filesystem::path& csv_path) {
    std::filesystem::path p = csv_path;
    p += ".provenance.json";
    return p;
}

inline void save_dataset(const std::filesystem::path& csv_path,
                         const signals::SignalDataset& dataset) {
    std::string out;
    for (const auto& item : dataset.items) {
        for (const auto& v : item.context) {
            out += io::format_double(v);
            out += ',';
        }
        out += io::format_double(item.target);
        out += '\n';
    }
    io::write_text_file(csv_path, out);

    json j;
    j["mixture"] = to_json(dataset.provenance.mixture);
    j["seed"] = dataset.provenance.seed;
    j["grid"] = to_json(dataset.provenance.grid);
    j["n_functions"] = dataset.provenance.n_functions;
    j["context_len"] = dataset.provenance.context_len;
    io::write_text_file(sidecar_path(csv_path), j.dump(2) + "\n");
}

inline signals::SignalDataset load_dataset(const std::filesystem::path& csv_path) {
    signals::SignalDataset dataset;
    const json j = json::parse(io::read_text_file(sidecar_path(csv_path)));
    dataset.provenance.mixture = mixture_from_json(j.at("mixture"));
    dataset.provenance.seed = j.at("seed").get<std::uint64_t>();
    dataset.provenance.grid = grid_from_json(j.at("grid"));
    dataset.provenance.n_functions = j.at("n_functions").get<int>();
    dataset.provenance.context_len = j.at("context_len").get<int>();

    for (const auto& line : io::read_lines(io::read_text_file(csv_path))) {
        if (line.empty()) continue;
        const auto fields = io::split(line, ',');
        if (fields.size() < 2) throw config_error("dataset csv: too few fields");
        nnet::Sample item;
        for (std::size_t i = 0; i + 1 < fields.size(); ++i)
            item.context.push_back(io::parse_double(fields[i]));
        item.target = io::parse_double(fields.back());
        dataset.items.push_back(std::move(item));
    }
    return dataset;
}

// Score matrix CSV: header "seed,sigma,<task names...>", one row per seed.
// The base row is kept in the sidecar-free form of a leading comment line.
inline std::string score_matrix_csv(const landscape::ScoreMatrix& scores) {
    std::string out = "# base";
    for (double b : scores.base_scores) {
        out += ',';
        out += io::format_double(b);
    }
    out += "\nseed,sigma";
    for (const auto& name : scores.task_names) {
        out += ',';
        out += name;
    }
    out += '\n';
    for (int i = 0; i < scores.n; ++i) {
        out += std::to_string(scores.seed_specs[static_cast<std::size_t>(i)].seed);
        out += ',';
        out += io::format_double(scores.seed_specs[static_cast<std::size_t>(i)].sigma);
        for (int j = 0; j < scores.m; ++j) {
            out += ',';
            out += io::format_double(scores.at(i, j));
        }
        out += '\n';
    }
    return out;
}

inline landscape::ScoreMatrix score_matrix_from_csv(const std::string& text) {
    landscape::ScoreMatrix scores;
    const auto lines = io::read_lines(text);
    if (lines.size() < 3) throw config_error("score matrix csv: too short");
    {
        const auto fields = io::split(lines[0], ',');
        if (fields.empty() || fields[0] != "# base")
            throw config_error("score matrix csv: missing base row");
        for (std::size_t i = 1; i < fields.size(); ++i)
            scores.base_scores.push_back(io::parse_double(fields[i]));
    }
    {
        const auto fields = io::split(lines[1], ',');
        if (fields.size() < 3 || fields[0] != "seed" || fields[1] != "sigma")
            throw config_error("score matrix csv: bad header");
        scores.task_names.assign(fields.begin() + 2, fields.end());
    }
    scores.m = static_cast<int>(scores.task_names.size());
    for (std::size_t li = 2; li < lines.size(); ++li) {
        if (lines[li].empty()) continue;
        const auto fields = io::split(lines[li], ',');
        if (fields.size() != scores.task_names.size() + 2)
            throw config_error("score matrix csv: row width mismatch");
        perturb::PerturbationSpec spec;
        spec.seed = std::stoull(fields[0]);
        spec.sigma = io::parse_double(fields[1]);
        scores.seed_specs.push_back(spec);
        for (std::size_t j = 2; j < fields.size(); ++j)
            scores.scores.push_back(io::parse_double(fields[j]));
    }
    scores.n = static_cast<int>(scores.seed_specs.size());
    scores.validate();
    return scores;
}

inline json to_json(const landscape::DiscordanceReport& report) {
    json j;
    j["n"] = report.n;
    j["m"] = report.m;
    j["tasks"] = report.task_names;
    j["discordance"] = report.discordance;
    j["bound_lo"] = 0.0;
    j["bound_hi"] = report.bound_hi;
    json corr = json::array();
    for (int r = 0; r < report.m; ++r) {
        json row = json::array();
        for (int c = 0; c < report.m; ++c)
            row.push_back(report.correlation[static_cast<std::size_t>(r) *
                                                 static_cast<std::size_t>(report.m) +
                                             static_cast<std::size_t>(c)]);
        corr.push_back(std::move(row));
    }
    j["correlation"] = std::move(corr);
    return j;
}

}  // namespace thicket::serialize
