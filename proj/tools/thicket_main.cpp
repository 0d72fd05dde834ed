// thicket: reproducible weight-perturbation experiments on a 1D-signal toy model.
//
// Subcommands: pretrain, randopt, es, distill, landscape, scaling, flops, report.
// All randomness flows from seeds.run / seeds.data / seeds.proj in the config;
// exit codes: 0 success, 2 config error, 3 numerical failure.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "thicket/commands.hpp"
#include "thicket/config.hpp"
#include "thicket/errors.hpp"
#include "thicket/flops.hpp"
#include "thicket/io.hpp"
#include "thicket/manifest.hpp"
#include "thicket/report.hpp"

namespace {

using thicket::config::ExperimentConfig;
using thicket::config::KeyValue;

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    int workers = -1;
    std::int64_t run_seed = -1;
    std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path,
                    "config file (key = value) or a stored manifest.json");
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--workers", args.workers, "worker threads (default: all cores)");
    cmd->add_option("--run-seed", args.run_seed, "override seeds.run");
    cmd->add_option("--set", args.overrides, "override any config key, e.g. --set search.n=500")
        ->take_all();
}

KeyValue load_key_value(const CommonArgs& args) {
    KeyValue kv;
    if (!args.config_path.empty()) {
        const std::string text = thicket::io::read_text_file(args.config_path);
        if (args.config_path.size() > 5 &&
            args.config_path.substr(args.config_path.size() - 5) == ".json") {
            const auto m = thicket::manifest::load(args.config_path);
            for (const auto& [k, v] : m.config) kv.set(k, v);
        } else {
            kv = KeyValue::parse(text);
        }
    }
    for (const auto& ov : args.overrides) {
        const auto eq = ov.find('=');
        if (eq == std::string::npos)
            throw thicket::config_error("--set expects key=value, got: " + ov);
        kv.set(ov.substr(0, eq), ov.substr(eq + 1));
    }
    if (!args.out_dir.empty()) kv.set("out.dir", args.out_dir);
    if (args.workers >= 0) kv.set("workers", std::to_string(args.workers));
    if (args.run_seed >= 0) kv.set("seeds.run", std::to_string(args.run_seed));
    return kv;
}

ExperimentConfig load_config(const CommonArgs& args) {
    return ExperimentConfig::from_key_value(load_key_value(args));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"thicket: random guessing + top-K ensembling on a 1D-signal toy model"};
    app.require_subcommand(1);

    CommonArgs pretrain_args, randopt_args, es_args, distill_args, landscape_args, scaling_args;
    auto* pretrain = app.add_subcommand("pretrain", "train the base next-value predictor");
    add_common(pretrain, pretrain_args);
    auto* randopt = app.add_subcommand("randopt", "guess-and-check search + top-K ensembling");
    add_common(randopt, randopt_args);
    auto* es = app.add_subcommand("es", "evolution-strategies baseline");
    add_common(es, es_args);
    auto* distill = app.add_subcommand("distill", "distill the selected ensemble into one model");
    add_common(distill, distill_args);
    auto* landscape = app.add_subcommand("landscape", "density / diversity measurements");
    add_common(landscape, landscape_args);
    auto* scaling = app.add_subcommand("scaling", "sweep population size and selection ratio");
    add_common(scaling, scaling_args);

    auto* flops_cmd = app.add_subcommand("flops", "closed-form training-compute accounting");
    std::string flops_method;
    std::uint64_t f_T = 1, f_B = 1, f_G = 1, f_N = 1, f_D = 1, f_P = 1, f_L = 1;
    flops_cmd->add_option("--method", flops_method, "grpo | ppo | es | randopt")->required();
    flops_cmd->add_option("-T,--steps", f_T, "iterations (ignored for randopt)");
    flops_cmd->add_option("-B,--batch", f_B, "batch size");
    flops_cmd->add_option("-G,--group", f_G, "responses per question");
    flops_cmd->add_option("-N,--population", f_N, "population size");
    flops_cmd->add_option("-D,--dataset", f_D, "evaluation dataset size");
    flops_cmd->add_option("-P,--params", f_P, "parameter count");
    flops_cmd->add_option("-L,--seq-len", f_L, "sequence length");

    auto* report = app.add_subcommand("report", "render SVG figures from stored manifests");
    std::vector<std::string> manifest_paths;
    report->add_option("manifests", manifest_paths, "manifest.json paths");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*pretrain) {
            const auto result = thicket::cli::cmd_pretrain(load_config(pretrain_args));
            std::cout << "pretrain: params " << result.params.values.size() << " values";
            if (!result.manifest.metrics.count("final_loss"))
                std::cout << " (init only)";
            else
                std::cout << ", final loss "
                          << thicket::io::format_double(result.manifest.metrics.at("final_loss"));
            std::cout << "\n";
        } else if (*randopt) {
            const auto result = thicket::cli::cmd_randopt(load_config(randopt_args));
            const auto& metrics = result.manifest.metrics;
            std::cout << "randopt: base " << thicket::io::format_double(metrics.at("base_train_score"))
                      << ", top1 " << thicket::io::format_double(metrics.at("top1_train_score"))
                      << ", ensemble "
                      << thicket::io::format_double(metrics.at("ensemble_train_score")) << "\n";
        } else if (*es) {
            const auto result = thicket::cli::cmd_es(load_config(es_args));
            const auto& metrics = result.manifest.metrics;
            std::cout << "es: base " << thicket::io::format_double(metrics.at("base_train_score"))
                      << ", final " << thicket::io::format_double(metrics.at("final_train_score"))
                      << "\n";
        } else if (*distill) {
            const auto result = thicket::cli::cmd_distill(load_config(distill_args));
            const auto& metrics = result.manifest.metrics;
            std::cout << "distill: base "
                      << thicket::io::format_double(metrics.at("base_train_score")) << ", ensemble "
                      << thicket::io::format_double(metrics.at("ensemble_train_score"))
                      << ", distilled "
                      << thicket::io::format_double(metrics.at("distilled_train_score")) << "\n";
        } else if (*landscape) {
            const auto result = thicket::cli::cmd_landscape(load_config(landscape_args));
            std::cout << "landscape: " << result.scores.n << " perturbations x " << result.scores.m
                      << " tasks";
            if (result.manifest.metrics.count("discordance"))
                std::cout << ", discordance "
                          << thicket::io::format_double(result.manifest.metrics.at("discordance"));
            std::cout << "\n";
        } else if (*scaling) {
            const auto result = thicket::cli::cmd_scaling(load_config(scaling_args));
            std::cout << "scaling: " << result.heatmap.size() << " population sizes x "
                      << result.heatmap.front().size() << " ratios\n";
        } else if (*flops_cmd) {
            thicket::flops::FlopsArgs a;
            a.steps = f_T;
            a.batch = f_B;
            a.group = f_G;
            a.population = f_N;
            a.dataset = f_D;
            a.params = f_P;
            a.seq_len = f_L;
            const auto method = thicket::flops::method_from_string(flops_method);
            std::cout << thicket::flops::u128_to_string(thicket::flops::total_flops(method, a))
                      << "\n";
        } else if (*report) {
            std::vector<std::filesystem::path> paths(manifest_paths.begin(), manifest_paths.end());
            const auto written = thicket::cli::cmd_report(paths);
            for (const auto& p : written) std::cout << p.string() << "\n";
        }
    } catch (const thicket::numerical_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const thicket::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
