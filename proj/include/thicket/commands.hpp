#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "thicket/config.hpp"
#include "thicket/errors.hpp"
#include "thicket/io.hpp"
#include "thicket/landscape.hpp"
#include "thicket/manifest.hpp"
#include "thicket/nnet.hpp"
#include "thicket/perturb.hpp"
#include "thicket/search.hpp"
#include "thicket/serialize.hpp"
#include "thicket/signals.hpp"
#include "thicket/svg.hpp"

namespace thicket::cli {

namespace fs = std::filesystem;
using config::ExperimentConfig;

// Sub-seed tags; everything random flows from seeds.run / seeds.data / seeds.proj.
inline constexpr std::uint64_t kInitTag = 0x11;
inline constexpr std::uint64_t kDataTag = 0x22;
inline constexpr std::uint64_t kTrainTag = 0x33;
inline constexpr std::uint64_t kTaskTag = 0x44;
inline constexpr std::uint64_t kMeasureTag = 0x55;
inline constexpr std::uint64_t kDistillTag = 0x66;
inline constexpr std::uint64_t kClusterTag = 0x77;

inline int resolve_workers(const ExperimentConfig& c) {
    if (c.workers > 0) return c.workers;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

inline signals::MixtureSpec build_mixture(const std::vector<signals::Family>& families,
                                          const signals::Grid& grid) {
    return signals::make_mixture(families, grid.x0, grid.x_at(grid.n_points - 1));
}

inline nnet::ParamVector initial_params(const ExperimentConfig& c) {
    return nnet::init_params(c.model, c.init_scheme, rng::hash64(c.data_seed, kInitTag));
}

struct PretrainOutput {
    nnet::ParamVector params;
    std::vector<double> loss_curve;
};

// Pretraining runs in stages with a geometrically decaying learning rate
// (pretrain.lr_decay per stage, pretrain.stages stages); one stage with
// decay 1.0 is plain fixed-rate Adam. Staging is what lets the single-family
// runs converge deep enough for stable long rollouts.
inline PretrainOutput pretrain_model(const ExperimentConfig& c) {
    PretrainOutput out;
    out.params = initial_params(c);
    if (c.pretrain_none) return out;
    const auto mixture = build_mixture(c.pretrain_families, c.grid);
    const auto dataset = signals::make_dataset(mixture, c.pretrain_n_functions,
                                               c.model.context_len, c.grid,
                                               rng::hash64(c.data_seed, kDataTag));
    const int stages = std::max(1, c.pretrain_stages);
    const int per_stage = std::max(1, c.pretrain_opt.epochs / stages);
    for (int stage = 0; stage < stages; ++stage) {
        nnet::OptHparams hp = c.pretrain_opt;
        hp.epochs = per_stage;
        hp.learning_rate =
            c.pretrain_opt.learning_rate * std::pow(c.pretrain_lr_decay, static_cast<double>(stage));
        hp.seed = rng::hash64(rng::hash64(c.data_seed, kTrainTag), static_cast<std::uint64_t>(stage));
        auto trained = nnet::train(out.params, c.model, dataset.items, hp);
        out.params = std::move(trained.params);
        out.loss_curve.insert(out.loss_curve.end(), trained.loss_curve.begin(),
                              trained.loss_curve.end());
    }
    return out;
}

// Base weights for search/measurement commands: an explicit params file if
// configured, otherwise pretrained on the fly from the same config.
inline nnet::ParamVector base_params(const ExperimentConfig& c) {
    if (c.raw.has("base.params"))
        return io::load_params_checked(c.raw.require("base.params"), c.model);
    return pretrain_model(c).params;
}

struct TaskSuite {
    std::vector<signals::ContinuationTask> train;
    std::vector<signals::ContinuationTask> test;
};

inline signals::FunctionSpec sample_task_spec(const ExperimentConfig& c, int index) {
    const auto family = signals::family_from_string(c.task_family);
    if (!c.task_params.empty() && index == 0) {
        signals::FunctionSpec spec{family, c.task_params};
        spec.validate();
        return spec;
    }
    const auto mixture = build_mixture({family}, c.grid);
    return signals::sample_function(
        mixture, rng::hash64(rng::hash64(c.data_seed, kTaskTag), static_cast<std::uint64_t>(index)));
}

inline TaskSuite build_task_suite(const ExperimentConfig& c) {
    TaskSuite suite;
    for (int i = 0; i < c.task_n_train; ++i)
        suite.train.push_back(signals::continuation_task(sample_task_spec(c, i), c.grid,
                                                         c.model.context_len, c.horizon));
    for (int i = 0; i < c.task_n_test; ++i)
        suite.test.push_back(signals::continuation_task(sample_task_spec(c, c.task_n_train + i),
                                                        c.grid, c.model.context_len, c.horizon));
    return suite;
}

inline double suite_score(const nnet::ParamVector& params, const nnet::MlpConfig& model,
                          std::span<const signals::ContinuationTask> tasks, int horizon,
                          int cap = 0) {
    if (tasks.empty()) throw config_error("suite_score: no tasks");
    const std::size_t n = cap > 0 ? std::min(tasks.size(), static_cast<std::size_t>(cap))
                                  : tasks.size();
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        sum += tasks[i].score(nnet::rollout(params, model, tasks[i].context, horizon));
    return sum / static_cast<double>(n);
}

inline double suite_score_ensemble(const search::TopKSelection& selection,
                                   const nnet::ParamVector& base, const nnet::MlpConfig& model,
                                   std::span<const signals::ContinuationTask> tasks, int horizon) {
    if (tasks.empty()) throw config_error("suite_score_ensemble: no tasks");
    double sum = 0.0;
    for (const auto& task : tasks)
        sum += task.score(search::ensemble_rollout(selection, base, model, task.context, horizon));
    return sum / static_cast<double>(tasks.size());
}

inline search::Scorer make_train_scorer(const ExperimentConfig& c,
                                        const std::vector<signals::ContinuationTask>& tasks) {
    const int horizon = c.horizon;
    const int cap = c.train_eval_cap;
    const nnet::MlpConfig model = c.model;
    return [&tasks, model, horizon, cap](const nnet::ParamVector& params) {
        return suite_score(params, model, tasks, horizon, cap);
    };
}

// The config snapshot embedded in manifests; worker count and output
// placement are runtime concerns and stay out of it.
inline std::map<std::string, std::string> config_snapshot(const ExperimentConfig& c) {
    auto entries = c.raw.entries;
    entries.erase("workers");
    entries.erase("out.dir");
    return entries;
}

inline manifest::RunManifest new_manifest(const ExperimentConfig& c, const std::string& command) {
    manifest::RunManifest m;
    m.command = command;
    m.config = config_snapshot(c);
    m.started_at = manifest::iso_utc_now();
    return m;
}

inline void write_artifact(manifest::RunManifest& m, const fs::path& dir, const std::string& name,
                           const std::string& content) {
    io::write_text_file(dir / name, content);
    m.artifacts[name] = io::fnv1a_hex(content);
}

inline fs::path finish_manifest(manifest::RunManifest& m, const fs::path& dir) {
    m.finished_at = manifest::iso_utc_now();
    const fs::path path = dir / "manifest.json";
    manifest::save(path, m);
    return path;
}

inline std::string loss_curve_csv(const std::vector<double>& curve) {
    std::string out = "epoch,loss\n";
    for (std::size_t e = 0; e < curve.size(); ++e)
        out += std::to_string(e) + "," + io::format_double(curve[e]) + "\n";
    return out;
}

// ---------------------------------------------------------------- pretrain

struct PretrainResult {
    manifest::RunManifest manifest;
    nnet::ParamVector params;
};

inline PretrainResult cmd_pretrain(const ExperimentConfig& c) {
    const fs::path dir = c.out_dir;
    fs::create_directories(dir);
    auto m = new_manifest(c, "pretrain");
    PretrainOutput pre = pretrain_model(c);

    write_artifact(m, dir, "params.bin", io::params_to_bytes(pre.params));
    write_artifact(m, dir, "loss_curve.csv", loss_curve_csv(pre.loss_curve));
    if (!c.pretrain_none && c.raw.get("pretrain.export_dataset", "false") == "true") {
        const auto mixture = build_mixture(c.pretrain_families, c.grid);
        const auto dataset = signals::make_dataset(mixture, c.pretrain_n_functions,
                                                   c.model.context_len, c.grid,
                                                   rng::hash64(c.data_seed, kDataTag));
        serialize::save_dataset(dir / "dataset.csv", dataset);
        m.artifacts["dataset.csv"] = io::fnv1a_hex(io::read_text_file(dir / "dataset.csv"));
        m.artifacts["dataset.csv.provenance.json"] =
            io::fnv1a_hex(io::read_text_file(dir / "dataset.csv.provenance.json"));
    }
    m.metrics["param_count"] = static_cast<double>(pre.params.values.size());
    m.metrics["epochs"] = static_cast<double>(pre.loss_curve.size());
    if (!pre.loss_curve.empty()) m.metrics["final_loss"] = pre.loss_curve.back();
    finish_manifest(m, dir);
    return {std::move(m), std::move(pre.params)};
}

// ---------------------------------------------------------------- randopt

struct RandOptResult {
    manifest::RunManifest manifest;
    search::GuessCheckResult gc;
    nnet::ParamVector base;
    TaskSuite suite;
};

inline std::string scores_csv(const std::vector<search::Candidate>& population) {
    std::string out = "index,seed,sigma,score,status\n";
    for (const auto& c : population) {
        out += std::to_string(c.index) + "," + std::to_string(c.spec.seed) + "," +
               io::format_double(c.spec.sigma) + "," + io::format_double(c.score) + "," +
               (c.failed ? "diverged" : "ok") + "\n";
    }
    return out;
}

inline std::string context_csv(const ExperimentConfig& c, const signals::ContinuationTask& task) {
    std::string out = "t,x,value\n";
    const int ctx = c.model.context_len;
    for (int t = 0; t < ctx; ++t)
        out += std::to_string(t - ctx) + "," + io::format_double(c.grid.x_at(t)) + "," +
               io::format_double(task.context[static_cast<std::size_t>(t)]) + "\n";
    return out;
}

inline std::string rollouts_csv(const ExperimentConfig& c, const signals::ContinuationTask& task,
                                const std::vector<double>& base_roll,
                                const std::vector<double>& ensemble,
                                const std::vector<std::vector<double>>& members) {
    std::string out = "t,x,truth,base,ensemble";
    for (std::size_t k = 0; k < members.size(); ++k) out += ",member_" + std::to_string(k);
    out += '\n';
    const int ctx = c.model.context_len;
    for (int t = 0; t < c.horizon; ++t) {
        out += std::to_string(t) + "," + io::format_double(c.grid.x_at(ctx + t)) + "," +
               io::format_double(task.truth[static_cast<std::size_t>(t)]) + "," +
               io::format_double(base_roll[static_cast<std::size_t>(t)]) + "," +
               io::format_double(ensemble[static_cast<std::size_t>(t)]);
        for (const auto& r : members) out += "," + io::format_double(r[static_cast<std::size_t>(t)]);
        out += '\n';
    }
    return out;
}

inline RandOptResult cmd_randopt(const ExperimentConfig& c) {
    const fs::path dir = c.out_dir;
    fs::create_directories(dir);
    auto m = new_manifest(c, "randopt");

    RandOptResult result;
    result.base = base_params(c);
    result.suite = build_task_suite(c);
    const auto scorer = make_train_scorer(c, result.suite.train);
    result.gc = search::guess_and_check(result.base, c.model, scorer, c.search_n, c.search_sigmas,
                                        c.search_k, c.run_seed, resolve_workers(c));
    m.record_population(result.gc.population, result.gc.selection);

    const auto& sel = result.gc.selection;
    m.metrics["base_train_score"] = suite_score(result.base, c.model, result.suite.train,
                                                c.horizon, c.train_eval_cap);
    m.metrics["top1_train_score"] = sel.selected.front().score;
    m.metrics["ensemble_train_score"] =
        suite_score_ensemble(sel, result.base, c.model, result.suite.train, c.horizon);
    if (!result.suite.test.empty()) {
        m.metrics["base_test_score"] =
            suite_score(result.base, c.model, result.suite.test, c.horizon);
        m.metrics["ensemble_test_score"] =
            suite_score_ensemble(sel, result.base, c.model, result.suite.test, c.horizon);
    }
    int failed = 0;
    for (const auto& cand : result.gc.population)
        if (cand.failed) ++failed;
    m.metrics["n_failed"] = failed;

    const auto& probe = result.suite.train.front();
    const auto base_roll = nnet::rollout(result.base, c.model, probe.context, c.horizon);
    const auto ens_roll =
        search::ensemble_rollout(sel, result.base, c.model, probe.context, c.horizon);
    std::vector<std::vector<double>> member_rolls;
    for (const auto& cand : sel.selected)
        member_rolls.push_back(nnet::rollout(perturb::apply(result.base, cand.spec), c.model,
                                             probe.context, c.horizon));

    write_artifact(m, dir, "scores.csv", scores_csv(result.gc.population));
    write_artifact(m, dir, "context.csv", context_csv(c, probe));
    write_artifact(m, dir, "rollouts.csv", rollouts_csv(c, probe, base_roll, ens_roll, member_rolls));
    finish_manifest(m, dir);
    result.manifest = std::move(m);
    return result;
}

// ---------------------------------------------------------------- es

struct EsCmdResult {
    manifest::RunManifest manifest;
    search::EsResult es;
};

inline EsCmdResult cmd_es(const ExperimentConfig& c) {
    const fs::path dir = c.out_dir;
    fs::create_directories(dir);
    auto m = new_manifest(c, "es");

    const auto base = base_params(c);
    const auto suite = build_task_suite(c);
    const auto scorer = make_train_scorer(c, suite.train);
    auto es = search::es_baseline(base, c.model, scorer, c.es_population, c.es_iterations,
                                  c.es_alpha, c.es_sigma, c.run_seed, resolve_workers(c));

    m.metrics["base_train_score"] = suite_score(base, c.model, suite.train, c.horizon,
                                                c.train_eval_cap);
    m.metrics["final_train_score"] = es.score_curve.back();
    if (!suite.test.empty()) {
        m.metrics["base_test_score"] = suite_score(base, c.model, suite.test, c.horizon);
        m.metrics["final_test_score"] = suite_score(es.params, c.model, suite.test, c.horizon);
    }

    std::string curve = "iteration,score\n";
    for (std::size_t t = 0; t < es.score_curve.size(); ++t)
        curve += std::to_string(t) + "," + io::format_double(es.score_curve[t]) + "\n";
    write_artifact(m, dir, "es_params.bin", io::params_to_bytes(es.params));
    write_artifact(m, dir, "score_curve.csv", curve);
    finish_manifest(m, dir);
    return {std::move(m), std::move(es)};
}

// ---------------------------------------------------------------- distill

struct DistillResult {
    manifest::RunManifest manifest;
    nnet::ParamVector distilled;
};

// Distillation inputs: the context windows the teacher actually visits.
// For each training task the ensemble rolls out its continuation, and every
// sliding window along (context ++ rollout) becomes one input; this keeps the
// student on-distribution when it later rolls out autoregressively. The
// task's own grid windows are included as well.
inline std::vector<std::vector<double>> distill_inputs(const ExperimentConfig& c,
                                                       const TaskSuite& suite,
                                                       const search::TopKSelection& selection,
                                                       const nnet::ParamVector& base) {
    std::vector<std::vector<double>> inputs;
    const int ctx = c.model.context_len;
    for (const auto& task : suite.train) {
        const auto ens =
            search::ensemble_rollout(selection, base, c.model, task.context, c.horizon);
        std::vector<double> seq = task.context;
        seq.insert(seq.end(), ens.begin(), ens.end());
        for (std::size_t w = 0; w + static_cast<std::size_t>(ctx) <= seq.size(); ++w)
            inputs.emplace_back(seq.begin() + static_cast<std::ptrdiff_t>(w),
                                seq.begin() + static_cast<std::ptrdiff_t>(w) + ctx);
        const auto ys = signals::sample_grid(task.spec, c.grid);
        for (int w = 0; w + ctx < c.grid.n_points; ++w)
            inputs.emplace_back(ys.begin() + w, ys.begin() + w + ctx);
    }
    return inputs;
}

inline DistillResult cmd_distill(const ExperimentConfig& c) {
    const fs::path dir = c.out_dir;
    fs::create_directories(dir);
    auto m = new_manifest(c, "distill");

    const auto base = base_params(c);
    const auto suite = build_task_suite(c);
    const auto scorer = make_train_scorer(c, suite.train);
    auto gc = search::guess_and_check(base, c.model, scorer, c.search_n, c.search_sigmas,
                                      c.search_k, c.run_seed, resolve_workers(c));
    m.record_population(gc.population, gc.selection);

    nnet::OptHparams hp = c.distill_opt;
    hp.seed = rng::hash64(c.run_seed, kDistillTag);
    auto distilled = search::distill(gc.selection, base, c.model,
                                     distill_inputs(c, suite, gc.selection, base), hp);

    m.metrics["base_train_score"] = suite_score(base, c.model, suite.train, c.horizon,
                                                c.train_eval_cap);
    m.metrics["ensemble_train_score"] =
        suite_score_ensemble(gc.selection, base, c.model, suite.train, c.horizon);
    m.metrics["distilled_train_score"] = suite_score(distilled, c.model, suite.train, c.horizon,
                                                     c.train_eval_cap);
    if (!suite.test.empty()) {
        m.metrics["base_test_score"] = suite_score(base, c.model, suite.test, c.horizon);
        m.metrics["ensemble_test_score"] =
            suite_score_ensemble(gc.selection, base, c.model, suite.test, c.horizon);
        m.metrics["distilled_test_score"] = suite_score(distilled, c.model, suite.test, c.horizon);
    }

    write_artifact(m, dir, "distilled.bin", io::params_to_bytes(distilled));
    write_artifact(m, dir, "scores.csv", scores_csv(gc.population));
    finish_manifest(m, dir);
    return {std::move(m), std::move(distilled)};
}

// ---------------------------------------------------------------- landscape

struct LandscapeResult {
    manifest::RunManifest manifest;
    landscape::ScoreMatrix scores;
    landscape::DiscordanceReport report;
    std::vector<std::pair<double, double>> coords;
};

inline std::string density_profile_csv(const landscape::ScoreMatrix& scores,
                                       std::span<const double> margins) {
    std::string out = "margin";
    for (const auto& name : scores.task_names) out += "," + name;
    out += '\n';
    std::vector<double> column(static_cast<std::size_t>(scores.n));
    for (double m : margins) {
        out += io::format_double(m);
        for (int j = 0; j < scores.m; ++j) {
            for (int i = 0; i < scores.n; ++i) column[static_cast<std::size_t>(i)] = scores.at(i, j);
            out += "," + io::format_double(landscape::solution_density(
                             scores.base_scores[static_cast<std::size_t>(j)], column, m));
        }
        out += '\n';
    }
    return out;
}

inline std::string coords_csv(const std::vector<perturb::PerturbationSpec>& specs,
                              const std::vector<std::pair<double, double>>& coords) {
    std::string out = "index,seed,sigma,x,y\n";
    for (std::size_t i = 0; i < specs.size(); ++i)
        out += std::to_string(i) + "," + std::to_string(specs[i].seed) + "," +
               io::format_double(specs[i].sigma) + "," + io::format_double(coords[i].first) + "," +
               io::format_double(coords[i].second) + "\n";
    return out;
}

// Scatter in the style of a weight-space accuracy landscape: red improved,
// blue degraded, gray neutral relative to the first task; base at the origin,
// dashed circle at the mean projected radius.
inline std::string scatter_svg(const landscape::ScoreMatrix& scores,
                               const std::vector<std::pair<double, double>>& coords) {
    svg::Figure fig(480.0, 480.0);
    auto ax = svg::Axes::fit(coords, 480.0, 480.0);
    ax.expand({{0.0, 0.0}});
    double mean_r = 0.0;
    for (const auto& [x, y] : coords) mean_r += std::sqrt(x * x + y * y);
    mean_r /= static_cast<double>(coords.size());
    std::vector<std::pair<double, double>> ring;
    for (int a = 0; a <= 64; ++a) {
        const double phi = 2.0 * 3.14159265358979323846 * static_cast<double>(a) / 64.0;
        ring.emplace_back(mean_r * std::cos(phi), mean_r * std::sin(phi));
    }
    ax.expand(ring);
    fig.polyline(ax.map(ring), "black", 1.0, "4,3");
    for (std::size_t i = 0; i < coords.size(); ++i) {
        const double delta = scores.at(static_cast<int>(i), 0) - scores.base_scores[0];
        const std::string color = delta > 0.0 ? "red" : (delta < 0.0 ? "blue" : "gray");
        const auto [vx, vy] = ax.to_view(coords[i].first, coords[i].second);
        fig.circle(vx, vy, 2.0, color, 0.7);
    }
    const auto [bx, by] = ax.to_view(0.0, 0.0);
    fig.circle(bx, by, 4.0, "black");
    fig.text(10.0, 16.0, "task " + scores.task_names[0] + ": red improved, blue degraded");
    return fig.finish();
}

// Percentile-rank lines per seed across tasks; the first few seeds highlighted.
inline std::string spectra_svg(const landscape::ScoreMatrix& scores) {
    const auto p = landscape::percentile_ranks(scores);
    svg::Figure fig(640.0, 400.0);
    svg::Axes ax;
    ax.x_lo = 0.0;
    ax.x_hi = static_cast<double>(scores.m - 1 > 0 ? scores.m - 1 : 1);
    ax.y_lo = 0.0;
    ax.y_hi = 1.0;
    const int shown = std::min(scores.n, 100);
    const int highlighted = std::min(scores.n, 4);
    for (int i = 0; i < shown; ++i) {
        std::vector<std::pair<double, double>> line;
        for (int j = 0; j < scores.m; ++j)
            line.emplace_back(static_cast<double>(j),
                              p[static_cast<std::size_t>(i) * static_cast<std::size_t>(scores.m) +
                                static_cast<std::size_t>(j)]);
        const bool hi = i < highlighted;
        fig.polyline(ax.map(line), hi ? "red" : "gray", hi ? 1.5 : 0.75, "", hi ? 1.0 : 0.35);
    }
    for (int j = 0; j < scores.m; ++j) {
        const auto [vx, vy] = ax.to_view(static_cast<double>(j), 0.0);
        fig.text(vx - 10.0, vy + 24.0, scores.task_names[static_cast<std::size_t>(j)], 10.0);
    }
    return fig.finish();
}

// One density curve per task from the profile CSV (margin + one column per task).
inline std::string density_svg(const std::string& profile_csv) {
    const auto lines = io::read_lines(profile_csv);
    if (lines.size() < 2) throw config_error("density_svg: empty profile");
    const auto header = io::split(lines[0], ',');
    const std::size_t n_tasks = header.size() - 1;
    std::vector<std::vector<std::pair<double, double>>> curves(n_tasks);
    for (std::size_t li = 1; li < lines.size(); ++li) {
        if (lines[li].empty()) continue;
        const auto fields = io::split(lines[li], ',');
        const double margin = io::parse_double(fields[0]);
        for (std::size_t j = 0; j < n_tasks; ++j)
            curves[j].emplace_back(margin, io::parse_double(fields[j + 1]));
    }
    svg::Figure fig(640.0, 400.0);
    svg::Axes ax = svg::Axes::fit(curves[0], 640.0, 400.0);
    for (const auto& c : curves) ax.expand(c);
    ax.expand({{ax.x_lo, 0.0}, {ax.x_lo, 1.0}});
    static const char* palette[] = {"red", "blue", "green", "orange", "purple", "brown", "black"};
    for (std::size_t j = 0; j < n_tasks; ++j) {
        fig.polyline(ax.map(curves[j]), palette[j % 7], 1.5);
        fig.text(10.0, 16.0 + 14.0 * static_cast<double>(j), header[j + 1], 10.0, palette[j % 7]);
    }
    return fig.finish();
}

inline LandscapeResult cmd_landscape(const ExperimentConfig& c) {
    const fs::path dir = c.out_dir;
    fs::create_directories(dir);
    auto m = new_manifest(c, "landscape");

    const auto base = base_params(c);
    // task sampling is keyed by the family, so listing a family twice measures
    // the same task twice (identical columns, discordance zero)
    std::vector<signals::ContinuationTask> tasks;
    for (std::size_t j = 0; j < c.measure_tasks.size(); ++j) {
        const auto family = signals::family_from_string(c.measure_tasks[j]);
        const auto mixture = build_mixture({family}, c.grid);
        const auto spec = signals::sample_function(
            mixture, rng::hash64(rng::hash64(c.data_seed, kMeasureTag),
                                 static_cast<std::uint64_t>(family)));
        tasks.push_back(signals::continuation_task(spec, c.grid, c.model.context_len, c.horizon));
    }
    if (tasks.empty()) throw config_error("landscape: need at least one measurement task");

    landscape::ScoreMatrix scores;
    scores.n = c.measure_n;
    scores.m = static_cast<int>(tasks.size());
    scores.scores.assign(static_cast<std::size_t>(scores.n) * static_cast<std::size_t>(scores.m),
                         0.0);
    for (std::size_t j = 0; j < tasks.size(); ++j) {
        scores.task_names.push_back(c.measure_tasks[j] + "_" + std::to_string(j));
        scores.base_scores.push_back(
            tasks[j].score(nnet::rollout(base, c.model, tasks[j].context, c.horizon)));
    }
    scores.seed_specs.resize(static_cast<std::size_t>(scores.n));
    search::detail::parallel_for(scores.n, resolve_workers(c), [&](int i) {
        perturb::PerturbationSpec spec{search::candidate_seed(c.run_seed, i), c.measure_sigma};
        scores.seed_specs[static_cast<std::size_t>(i)] = spec;
        const auto theta = perturb::apply(base, spec);
        for (std::size_t j = 0; j < tasks.size(); ++j)
            scores.at(i, static_cast<int>(j)) =
                tasks[j].score(nnet::rollout(theta, c.model, tasks[j].context, c.horizon));
    });
    scores.validate();

    LandscapeResult result;
    result.scores = scores;
    result.coords = landscape::project_2d(scores.seed_specs, base.values.size(), c.proj_seed);

    const std::string profile = density_profile_csv(scores, c.measure_margins);
    write_artifact(m, dir, "scores.csv", serialize::score_matrix_csv(scores));
    write_artifact(m, dir, "density_profile.csv", profile);
    write_artifact(m, dir, "coords.csv", coords_csv(scores.seed_specs, result.coords));
    write_artifact(m, dir, "scatter.svg", scatter_svg(scores, result.coords));

    for (int j = 0; j < scores.m; ++j) {
        std::vector<double> column(static_cast<std::size_t>(scores.n));
        for (int i = 0; i < scores.n; ++i) column[static_cast<std::size_t>(i)] = scores.at(i, j);
        m.metrics["delta0_" + scores.task_names[static_cast<std::size_t>(j)]] =
            landscape::solution_density(scores.base_scores[static_cast<std::size_t>(j)], column,
                                        0.0);
    }

    if (scores.m >= 2) {
        result.report = landscape::discordance_report(scores);
        write_artifact(m, dir, "discordance.json",
                       serialize::to_json(result.report).dump(2) + "\n");
        m.metrics["discordance"] = result.report.discordance;
    }

    if (c.kmeans_k > 0) {
        const auto pca = landscape::pca_2d(
            result.report.percentiles.empty()
                ? landscape::percentile_ranks(scores)
                : result.report.percentiles,
            scores.n, scores.m);
        const auto clusters =
            landscape::kmeans(pca.coords, c.kmeans_k, rng::hash64(c.run_seed, kClusterTag));
        std::string out = "index,pc1,pc2,cluster\n";
        for (int i = 0; i < scores.n; ++i)
            out += std::to_string(i) + "," +
                   io::format_double(pca.coords[static_cast<std::size_t>(i)].first) + "," +
                   io::format_double(pca.coords[static_cast<std::size_t>(i)].second) + "," +
                   std::to_string(clusters.labels[static_cast<std::size_t>(i)]) + "\n";
        write_artifact(m, dir, "clusters.csv", out);
        m.metrics["pca_explained_1"] = pca.explained_variance_1;
        m.metrics["pca_explained_2"] = pca.explained_variance_2;
    }

    write_artifact(m, dir, "spectra.svg", spectra_svg(scores));
    write_artifact(m, dir, "density.svg", density_svg(profile));
    finish_manifest(m, dir);
    result.manifest = std::move(m);
    return result;
}

// ---------------------------------------------------------------- scaling

struct ScalingResult {
    manifest::RunManifest manifest;
    std::vector<std::vector<double>> heatmap;  // [n_index][ratio_index] ensemble train score
    std::vector<double> top1;                  // per n: top-1 training score
};

inline ScalingResult cmd_scaling(const ExperimentConfig& c) {
    const fs::path dir = c.out_dir;
    fs::create_directories(dir);
    auto m = new_manifest(c, "scaling");

    if (c.scaling_n_list.empty() || c.scaling_k_ratios.empty())
        throw config_error("scaling: n_list and k_ratios must be non-empty");
    for (long n : c.scaling_n_list)
        if (n < 1) throw config_error("scaling: population sizes must be >= 1");

    const auto base = base_params(c);
    const auto suite = build_task_suite(c);
    const auto scorer = make_train_scorer(c, suite.train);

    // Single sigma so candidate i is identical across population sizes and the
    // populations are truly nested; the top-1 score is then non-decreasing in N.
    const perturb::SigmaSet sigma_one{{c.search_sigmas.values.front()}};
    const int n_max = static_cast<int>(*std::max_element(c.scaling_n_list.begin(),
                                                         c.scaling_n_list.end()));
    auto gc_max = search::guess_and_check(base, c.model, scorer, n_max, sigma_one, 1, c.run_seed,
                                          resolve_workers(c));

    ScalingResult result;
    std::string heatmap_csv = "n";
    for (double r : c.scaling_k_ratios) heatmap_csv += ",k_ratio_" + io::format_double(r);
    heatmap_csv += '\n';
    std::string top1_csv = "n,top1_train_score\n";

    for (long n_long : c.scaling_n_list) {
        const int n = static_cast<int>(n_long);
        std::vector<search::Candidate> population(gc_max.population.begin(),
                                                  gc_max.population.begin() + n);
        heatmap_csv += std::to_string(n);
        std::vector<double> row;
        for (double ratio : c.scaling_k_ratios) {
            int k = static_cast<int>(std::llround(ratio * n));
            k = std::clamp(k, 1, n);
            const auto sel = search::select_top_k(population, k);
            const double cell = suite_score_ensemble(sel, base, c.model, suite.train, c.horizon);
            row.push_back(cell);
            heatmap_csv += "," + io::format_double(cell);
        }
        heatmap_csv += '\n';
        result.heatmap.push_back(std::move(row));
        const double top1 = search::select_top_k(population, 1).selected.front().score;
        result.top1.push_back(top1);
        top1_csv += std::to_string(n) + "," + io::format_double(top1) + "\n";
    }

    write_artifact(m, dir, "heatmap.csv", heatmap_csv);
    write_artifact(m, dir, "top1.csv", top1_csv);

    // color cells by rank within the sweep
    double lo = result.heatmap[0][0];
    double hi = lo;
    for (const auto& row : result.heatmap)
        for (double v : row) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    const double cell_w = 80.0;
    const double cell_h = 40.0;
    svg::Figure fig(120.0 + cell_w * static_cast<double>(c.scaling_k_ratios.size()),
                    80.0 + cell_h * static_cast<double>(c.scaling_n_list.size()));
    for (std::size_t i = 0; i < result.heatmap.size(); ++i) {
        for (std::size_t j = 0; j < result.heatmap[i].size(); ++j) {
            const double v = result.heatmap[i][j];
            const double t = hi > lo ? (v - lo) / (hi - lo) : 0.5;
            const int red = static_cast<int>(255.0 * t);
            const int blue = static_cast<int>(255.0 * (1.0 - t));
            char color[8];
            std::snprintf(color, sizeof(color), "#%02x%02x%02x", red, 64, blue);
            fig.rect(100.0 + cell_w * static_cast<double>(j),
                     40.0 + cell_h * static_cast<double>(i), cell_w, cell_h, color);
        }
        fig.text(10.0, 65.0 + cell_h * static_cast<double>(i),
                 "N=" + std::to_string(c.scaling_n_list[i]));
    }
    for (std::size_t j = 0; j < c.scaling_k_ratios.size(); ++j)
        fig.text(100.0 + cell_w * static_cast<double>(j) + 10.0, 30.0,
                 "K/N=" + io::format_double(c.scaling_k_ratios[j]));
    write_artifact(m, dir, "heatmap.svg", fig.finish());

    for (std::size_t i = 0; i < result.top1.size(); ++i)
        m.metrics["top1_n" + std::to_string(c.scaling_n_list[i])] = result.top1[i];
    finish_manifest(m, dir);
    result.manifest = std::move(m);
    return result;
}

}  // namespace thicket::cli
