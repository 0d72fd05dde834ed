#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "thicket/config.hpp"
#include "thicket/io.hpp"
#include "thicket/manifest.hpp"
#include "thicket/nnet.hpp"
#include "thicket/rng.hpp"
#include "thicket/serialize.hpp"
#include "thicket/signals.hpp"

#include "test_util.hpp"

using namespace thicket;
namespace fs = std::filesystem;
using test_util::TempDir;

TEST_CASE("format_double: shortest form round-trips exactly") {
    for (std::uint64_t i = 0; i < 10000; ++i) {
        const double v = (rng::uniform(5150, i) - 0.5) * std::pow(10.0, static_cast<double>(
                                                                            i % 60) - 30.0);
        CHECK(io::parse_double(io::format_double(v)) == v);
    }
    CHECK(io::format_double(0.1) == "0.1");
    CHECK(io::format_double(1.0) == "1");
    CHECK(io::format_double(-0.25) == "-0.25");
    const double inf = std::numeric_limits<double>::infinity();
    CHECK(io::parse_double(io::format_double(-inf)) == -inf);
}

TEST_CASE("params: save/load round-trip is bit-exact") {
    TempDir tmp;
    nnet::MlpConfig c;
    c.context_len = 5;
    c.hidden = {7, 3};
    const auto p = nnet::init_params(c, nnet::InitScheme::Kaiming, 123);
    const auto path = tmp.path / "params.bin";
    io::save_params(path, p);
    const auto loaded = io::load_params(path);
    CHECK(loaded.values == p.values);
    REQUIRE(loaded.layout.size() == p.layout.size());
    CHECK(loaded.layout[1].weight_offset == p.layout[1].weight_offset);
    // checked loader accepts the matching config
    CHECK_NOTHROW(io::load_params_checked(path, c));
}

TEST_CASE("params: loader rejects mismatched layouts and corrupt files") {
    TempDir tmp;
    nnet::MlpConfig c;
    c.context_len = 5;
    c.hidden = {7, 3};
    const auto p = nnet::init_params(c, nnet::InitScheme::Xavier, 9);
    const auto path = tmp.path / "params.bin";
    io::save_params(path, p);

    nnet::MlpConfig other = c;
    other.hidden = {7, 4};
    CHECK_THROWS_AS(io::load_params_checked(path, other), config_error);

    auto bytes = io::params_to_bytes(p);
    bytes[0] = 'X';
    io::write_text_file(tmp.path / "bad_magic.bin", bytes);
    CHECK_THROWS_AS(io::load_params(tmp.path / "bad_magic.bin"), config_error);

    const auto truncated = io::params_to_bytes(p).substr(0, 20);
    io::write_text_file(tmp.path / "truncated.bin", truncated);
    CHECK_THROWS_AS(io::load_params(tmp.path / "truncated.bin"), config_error);
}

TEST_CASE("dataset: CSV + provenance sidecar round-trip") {
    TempDir tmp;
    const auto mixture = signals::make_mixture({signals::Family::Linear, signals::Family::Square});
    signals::Grid grid{0.0, 0.25, 12};
    const auto ds = signals::make_dataset(mixture, 3, 4, grid, 99);
    const auto path = tmp.path / "dataset.csv";
    serialize::save_dataset(path, ds);
    CHECK(fs::exists(serialize::sidecar_path(path)));
    const auto loaded = serialize::load_dataset(path);
    REQUIRE(loaded.items.size() == ds.items.size());
    for (std::size_t i = 0; i < ds.items.size(); ++i) {
        CHECK(loaded.items[i].context == ds.items[i].context);
        CHECK(loaded.items[i].target == ds.items[i].target);
    }
    CHECK(loaded.provenance.seed == 99);
    CHECK(loaded.provenance.grid.n_points == 12);
    CHECK(loaded.provenance.mixture.families == ds.provenance.mixture.families);
}

TEST_CASE("score matrix: CSV round-trip") {
    landscape::ScoreMatrix m;
    m.n = 3;
    m.m = 2;
    m.task_names = {"linear_0", "square_1"};
    m.base_scores = {-0.5, -1.25};
    m.seed_specs = {{11, 0.005}, {22, 0.005}, {33, 0.005}};
    m.scores = {-0.1, -2.0, -0.4, -1.0, -0.7, -0.9};
    const auto csv = serialize::score_matrix_csv(m);
    const auto back = serialize::score_matrix_from_csv(csv);
    CHECK(back.n == 3);
    CHECK(back.m == 2);
    CHECK(back.scores == m.scores);
    CHECK(back.base_scores == m.base_scores);
    CHECK(back.task_names == m.task_names);
    CHECK(back.seed_specs[1].seed == 22);
    // LF endings, "." decimals
    CHECK(csv.find('\r') == std::string::npos);
    CHECK(csv.find(',') != std::string::npos);
}

TEST_CASE("manifest: JSON round-trip preserves everything") {
    manifest::RunManifest m;
    m.command = "randopt";
    m.config["search.n"] = "100";
    m.config["seeds.run"] = "7";
    m.started_at = "2024-01-01T00:00:00Z";
    m.finished_at = "2024-01-01T00:00:05Z";
    m.candidates.push_back({0, 12345, 0.002, -0.25, "ok"});
    m.candidates.push_back({1, 67890, 0.002,
                            -std::numeric_limits<double>::infinity(), "diverged"});
    m.selection = {0};
    m.metrics["base_train_score"] = -0.5;
    m.artifacts["scores.csv"] = "0123456789abcdef";

    TempDir tmp;
    manifest::save(tmp.path / "manifest.json", m);
    const auto back = manifest::load(tmp.path / "manifest.json");
    CHECK(back.command == m.command);
    CHECK(back.config == m.config);
    CHECK(back.candidates.size() == 2);
    CHECK(back.candidates[1].score == -std::numeric_limits<double>::infinity());
    CHECK(back.candidates[1].status == "diverged");
    CHECK(back.selection == m.selection);
    CHECK(back.metrics == m.metrics);
    CHECK(back.artifacts == m.artifacts);

    // canonical text excludes timestamps
    const auto canon = manifest::canonical_text(m);
    CHECK(canon.find("started_at") == std::string::npos);
    auto m2 = m;
    m2.started_at = "2030-12-31T23:59:59Z";
    CHECK(manifest::canonical_text(m2) == canon);
}

TEST_CASE("config: parse, defaults, overrides, errors") {
    const std::string text =
        "# comment line\n"
        "model.context_len = 8\n"
        "model.hidden = 32, 16\n"
        "search.sigmas = 0.001, 0.002\n"
        "seeds.run = 42\n";
    auto kv = config::KeyValue::parse(text);
    CHECK(kv.get_int("model.context_len", 0) == 8);
    CHECK(kv.get_list("model.hidden", {}) == std::vector<std::string>{"32", "16"});
    auto c = config::ExperimentConfig::from_key_value(kv);
    CHECK(c.model.context_len == 8);
    CHECK(c.model.hidden == std::vector<int>{32, 16});
    CHECK(c.search_sigmas.values == std::vector<double>{0.001, 0.002});
    CHECK(c.run_seed == 42);
    // defaults fill in everything else
    CHECK(c.search_n == 1000);
    CHECK(c.measure_sigma == 0.005);
    CHECK(c.grid.n_points == 96);

    CHECK_THROWS_AS(config::KeyValue::parse("novalue\n"), config_error);
    auto bad = kv;
    bad.set("search.k", "5000");
    CHECK_THROWS_AS(config::ExperimentConfig::from_key_value(bad), config_error);
    auto bad2 = kv;
    bad2.set("model.activation", "gelu");
    CHECK_THROWS_AS(config::ExperimentConfig::from_key_value(bad2), config_error);
}

TEST_CASE("fnv1a checksums are stable") {
    CHECK(io::fnv1a_hex("") == "cbf29ce484222325");
    CHECK(io::fnv1a_hex("a") != io::fnv1a_hex("b"));
    CHECK(io::fnv1a_hex("thicket") == io::fnv1a_hex("thicket"));
}
