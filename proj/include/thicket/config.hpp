#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "thicket/errors.hpp"
#include "thicket/io.hpp"
#include "thicket/nnet.hpp"
#include "thicket/perturb.hpp"
#include "thicket/signals.hpp"

namespace thicket::config {

// Plain-text nested key-value format: one "section.key = value" per line,
// '#' starts a comment. Every key can be overridden on the command line.
struct KeyValue {
    std::map<std::string, std::string> entries;

    static KeyValue parse(const std::string& text) {
        KeyValue kv;
        int line_no = 0;
        for (const auto& raw : io::read_lines(text)) {
            ++line_no;
            std::string line = raw;
            const std::size_t hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const auto strip = [](std::string s) {
                const auto b = s.find_first_not_of(" \t");
                if (b == std::string::npos) return std::string();
                const auto e = s.find_last_not_of(" \t");
                return s.substr(b, e - b + 1);
            };
            line = strip(line);
            if (line.empty()) continue;
            const std::size_t eq = line.find('=');
            if (eq == std::string::npos)
                throw config_error("config line " + std::to_string(line_no) + ": expected key = value");
            const std::string key = strip(line.substr(0, eq));
            const std::string value = strip(line.substr(eq + 1));
            if (key.empty()) throw config_error("config line " + std::to_string(line_no) + ": empty key");
            kv.entries[key] = value;
        }
        return kv;
    }

    void set(const std::string& key, const std::string& value) { entries[key] = value; }

    bool has(const std::string& key) const { return entries.count(key) > 0; }

    std::string get(const std::string& key, const std::string& fallback) const {
        auto it = entries.find(key);
        return it == entries.end() ? fallback : it->second;
    }

    std::string require(const std::string& key) const {
        auto it = entries.find(key);
        if (it == entries.end()) throw config_error("missing config key: " + key);
        return it->second;
    }

    double get_double(const std::string& key, double fallback) const {
        auto it = entries.find(key);
        return it == entries.end() ? fallback : io::parse_double(it->second);
    }

    long get_int(const std::string& key, long fallback) const {
        auto it = entries.find(key);
        if (it == entries.end()) return fallback;
        try {
            return std::stol(it->second);
        } catch (const std::exception&) {
            throw config_error("config key " + key + ": not an integer: " + it->second);
        }
    }

    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const {
        auto it = entries.find(key);
        if (it == entries.end()) return fallback;
        try {
            return std::stoull(it->second);
        } catch (const std::exception&) {
            throw config_error("config key " + key + ": not an unsigned integer: " + it->second);
        }
    }

    std::vector<std::string> get_list(const std::string& key,
                                      const std::vector<std::string>& fallback) const {
        auto it = entries.find(key);
        if (it == entries.end()) return fallback;
        std::vector<std::string> out;
        for (auto& field : io::split(it->second, ',')) {
            const auto b = field.find_first_not_of(" \t");
            if (b == std::string::npos) continue;
            const auto e = field.find_last_not_of(" \t");
            out.push_back(field.substr(b, e - b + 1));
        }
        return out;
    }

    std::vector<double> get_doubles(const std::string& key,
                                    const std::vector<double>& fallback) const {
        if (!has(key)) return fallback;
        std::vector<double> out;
        for (const auto& f : get_list(key, {})) out.push_back(io::parse_double(f));
        return out;
    }

    std::string to_text() const {
        std::string out;
        for (const auto& [key, value] : entries) {
            out += key;
            out += " = ";
            out += value;
            out += '\n';
        }
        return out;
    }
};

// Typed view over the key-value config, with the experiment defaults baked in.
struct ExperimentConfig {
    KeyValue raw;

    nnet::MlpConfig model;
    nnet::InitScheme init_scheme = nnet::InitScheme::Xavier;

    // "none" -> init-only pretraining
    bool pretrain_none = false;
    std::vector<signals::Family> pretrain_families;
    int pretrain_n_functions = 64;
    nnet::OptHparams pretrain_opt;
    int pretrain_stages = 1;
    double pretrain_lr_decay = 1.0;

    signals::Grid grid;
    int horizon = 60;

    std::string task_family = "linear";
    std::vector<double> task_params;  // empty -> sampled from seeds.data
    int task_n_train = 1;
    int task_n_test = 32;

    int search_n = 1000;
    int search_k = 5;
    perturb::SigmaSet search_sigmas{{0.002}};
    int train_eval_cap = 200;

    int es_population = 30;
    int es_iterations = 34;
    double es_alpha = 5e-4;
    double es_sigma = 1e-3;

    int measure_n = 500;
    double measure_sigma = 0.005;
    std::vector<double> measure_margins{0.0, 0.01, 0.05};
    std::vector<std::string> measure_tasks{"linear", "sinusoid", "square"};
    int kmeans_k = 0;  // 0 -> clustering not requested

    std::vector<long> scaling_n_list{10, 50, 250, 1000};
    std::vector<double> scaling_k_ratios{0.01, 0.05, 0.2, 1.0};

    nnet::OptHparams distill_opt;

    std::uint64_t run_seed = 1;
    std::uint64_t data_seed = 2;
    std::uint64_t proj_seed = 3;

    std::string out_dir = "out";
    int workers = 0;  // 0 -> available parallelism

    static ExperimentConfig from_key_value(const KeyValue& kv) {
        ExperimentConfig c;
        c.raw = kv;

        c.model.context_len = static_cast<int>(kv.get_int("model.context_len", 16));
        c.model.hidden.clear();
        for (const auto& h : kv.get_list("model.hidden", {"64", "64"}))
            c.model.hidden.push_back(static_cast<int>(std::stol(h)));
        const std::string act = kv.get("model.activation", "tanh");
        if (act == "tanh")
            c.model.activation = nnet::Activation::Tanh;
        else if (act == "relu")
            c.model.activation = nnet::Activation::Relu;
        else
            throw config_error("model.activation must be tanh or relu");
        c.model.validate();

        const std::string scheme = kv.get("init.scheme", "xavier");
        if (scheme == "xavier")
            c.init_scheme = nnet::InitScheme::Xavier;
        else if (scheme == "kaiming")
            c.init_scheme = nnet::InitScheme::Kaiming;
        else
            throw config_error("init.scheme must be xavier or kaiming");

        const std::string mixture = kv.get("pretrain.mixture", "all");
        if (mixture == "none") {
            c.pretrain_none = true;
        } else if (mixture == "all") {
            c.pretrain_families = signals::all_families();
        } else {
            for (const auto& name : kv.get_list("pretrain.mixture", {}))
                c.pretrain_families.push_back(signals::family_from_string(name));
            if (c.pretrain_families.empty())
                throw config_error("pretrain.mixture: no families given");
        }
        c.pretrain_n_functions = static_cast<int>(kv.get_int("pretrain.n_functions", 64));
        c.pretrain_opt.epochs = static_cast<int>(kv.get_int("pretrain.epochs", 200));
        c.pretrain_opt.batch_size = static_cast<int>(kv.get_int("pretrain.batch_size", 64));
        c.pretrain_opt.learning_rate = kv.get_double("pretrain.learning_rate", 1e-3);
        c.pretrain_stages = static_cast<int>(kv.get_int("pretrain.stages", 1));
        c.pretrain_lr_decay = kv.get_double("pretrain.lr_decay", 1.0);
        if (c.pretrain_stages < 1 || !(c.pretrain_lr_decay > 0.0))
            throw config_error("pretrain.stages must be >= 1 and pretrain.lr_decay > 0");

        c.grid.x0 = kv.get_double("grid.x0", 0.0);
        c.grid.dx = kv.get_double("grid.dx", 0.1);
        c.grid.n_points = static_cast<int>(kv.get_int("grid.n_points", 96));
        c.grid.validate();
        c.horizon = static_cast<int>(kv.get_int("grid.horizon", 60));
        if (c.grid.n_points < c.model.context_len + c.horizon)
            throw config_error("grid.n_points must cover context_len + horizon");

        c.task_family = kv.get("task.family", "linear");
        signals::family_from_string(c.task_family);  // validate early
        c.task_params = kv.get_doubles("task.params", {});
        c.task_n_train = static_cast<int>(kv.get_int("task.n_train", 1));
        c.task_n_test = static_cast<int>(kv.get_int("task.n_test", 32));

        c.search_n = static_cast<int>(kv.get_int("search.n", 1000));
        c.search_k = static_cast<int>(kv.get_int("search.k", 5));
        c.search_sigmas.values = kv.get_doubles("search.sigmas", {0.002});
        c.search_sigmas.validate();
        c.train_eval_cap = static_cast<int>(kv.get_int("search.train_eval_cap", 200));
        if (c.search_k < 1 || c.search_k > c.search_n)
            throw config_error("need 1 <= search.k <= search.n");

        c.es_population = static_cast<int>(kv.get_int("es.population", 30));
        c.es_iterations = static_cast<int>(kv.get_int("es.iterations", 34));
        c.es_alpha = kv.get_double("es.alpha", 5e-4);
        c.es_sigma = kv.get_double("es.sigma", 1e-3);

        c.measure_n = static_cast<int>(kv.get_int("measure.n_perturbations", 500));
        c.measure_sigma = kv.get_double("measure.sigma", 0.005);
        c.measure_margins = kv.get_doubles("measure.margins", {0.0, 0.01, 0.05});
        c.measure_tasks = kv.get_list("measure.tasks", {"linear", "sinusoid", "square"});
        for (const auto& t : c.measure_tasks) signals::family_from_string(t);
        c.kmeans_k = static_cast<int>(kv.get_int("measure.kmeans_k", 0));

        c.scaling_n_list.clear();
        for (const auto& s : kv.get_list("scaling.n_list", {"10", "50", "250", "1000"}))
            c.scaling_n_list.push_back(std::stol(s));
        c.scaling_k_ratios = kv.get_doubles("scaling.k_ratios", {0.01, 0.05, 0.2, 1.0});

        c.distill_opt.epochs = static_cast<int>(kv.get_int("distill.epochs", 300));
        c.distill_opt.batch_size = static_cast<int>(kv.get_int("distill.batch_size", 16));
        c.distill_opt.learning_rate = kv.get_double("distill.learning_rate", 1e-3);

        c.run_seed = kv.get_u64("seeds.run", 1);
        c.data_seed = kv.get_u64("seeds.data", 2);
        c.proj_seed = kv.get_u64("seeds.proj", 3);

        c.out_dir = kv.get("out.dir", "out");
        c.workers = static_cast<int>(kv.get_int("workers", 0));
        return c;
    }
};

}  // namespace thicket::config
