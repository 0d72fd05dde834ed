#pragma once

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "thicket/config.hpp"
#include "thicket/io.hpp"
#include "thicket/search.hpp"

namespace thicket::manifest {

inline constexpr const char* kToolVersion = "0.1.0";

inline std::string iso_utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct CandidateRecord {
    int index = 0;
    std::uint64_t seed = 0;
    double sigma = 0.0;
    double score = 0.0;
    std::string status = "ok";  // "ok" | "diverged"
};

// Full record of one experiment run: enough to reproduce every data file.
struct RunManifest {
    std::string tool_version = kToolVersion;
    std::string command;
    std::map<std::string, std::string> config;  // key-value snapshot
    std::string started_at;
    std::string finished_at;
    std::vector<CandidateRecord> candidates;
    std::vector<int> selection;  // indices into candidates, best first
    std::map<std::string, double> metrics;
    std::map<std::string, std::string> artifacts;  // relative path -> fnv1a64

    void record_population(const std::vector<search::Candidate>& population,
                           const search::TopKSelection& sel) {
        candidates.clear();
        candidates.reserve(population.size());
        for (const auto& c : population) {
            CandidateRecord rec;
            rec.index = c.index;
            rec.seed = c.spec.seed;
            rec.sigma = c.spec.sigma;
            rec.score = c.score;
            rec.status = c.failed ? "diverged" : "ok";
            candidates.push_back(rec);
        }
        selection.clear();
        for (const auto& c : sel.selected) selection.push_back(c.index);
    }
};

inline nlohmann::ordered_json to_json(const RunManifest& m, bool include_timestamps = true) {
    nlohmann::ordered_json j;
    j["tool_version"] = m.tool_version;
    j["command"] = m.command;
    if (include_timestamps) {
        j["started_at"] = m.started_at;
        j["finished_at"] = m.finished_at;
    }
    nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
    for (const auto& [k, v] : m.config) cfg[k] = v;
    j["config"] = std::move(cfg);
    nlohmann::ordered_json cands = nlohmann::ordered_json::array();
    for (const auto& c : m.candidates) {
        nlohmann::ordered_json rec;
        rec["index"] = c.index;
        rec["seed"] = c.seed;
        // scores may be -inf for diverged candidates; JSON numbers cannot hold
        // that, so real values are serialized as shortest-round-trip strings.
        rec["sigma"] = io::format_double(c.sigma);
        rec["score"] = io::format_double(c.score);
        rec["status"] = c.status;
        cands.push_back(std::move(rec));
    }
    j["candidates"] = std::move(cands);
    j["selection"] = m.selection;
    nlohmann::ordered_json metrics = nlohmann::ordered_json::object();
    for (const auto& [k, v] : m.metrics) metrics[k] = io::format_double(v);
    j["metrics"] = std::move(metrics);
    nlohmann::ordered_json artifacts = nlohmann::ordered_json::object();
    for (const auto& [k, v] : m.artifacts) artifacts[k] = v;
    j["artifacts"] = std::move(artifacts);
    return j;
}

inline RunManifest from_json(const nlohmann::ordered_json& j) {
    RunManifest m;
    m.tool_version = j.at("tool_version").get<std::string>();
    m.command = j.at("command").get<std::string>();
    m.started_at = j.value("started_at", "");
    m.finished_at = j.value("finished_at", "");
    for (const auto& [k, v] : j.at("config").items())
        m.config[k] = v.get<std::string>();
    for (const auto& rec : j.at("candidates")) {
        CandidateRecord c;
        c.index = rec.at("index").get<int>();
        c.seed = rec.at("seed").get<std::uint64_t>();
        c.sigma = io::parse_double(rec.at("sigma").get<std::string>());
        c.score = io::parse_double(rec.at("score").get<std::string>());
        c.status = rec.at("status").get<std::string>();
        m.candidates.push_back(c);
    }
    for (const auto& idx : j.at("selection")) m.selection.push_back(idx.get<int>());
    for (const auto& [k, v] : j.at("metrics").items())
        m.metrics[k] = io::parse_double(v.get<std::string>());
    for (const auto& [k, v] : j.at("artifacts").items())
        m.artifacts[k] = v.get<std::string>();
    return m;
}

// Canonical text with timestamps stripped; what "bit-identical manifests
// (timestamps excluded)" compares.
inline std::string canonical_text(const RunManifest& m) {
    return to_json(m, /*include_timestamps=*/false).dump(2) + "\n";
}

inline void save(const std::filesystem::path& path, const RunManifest& m) {
    io::write_text_file(path, to_json(m).dump(2) + "\n");
}

inline RunManifest load(const std::filesystem::path& path) {
    return from_json(nlohmann::ordered_json::parse(io::read_text_file(path)));
}

}  // namespace thicket::manifest
