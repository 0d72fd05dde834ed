#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "thicket/errors.hpp"
#include "thicket/nnet.hpp"
#include "thicket/rng.hpp"

namespace thicket::signals {

enum class Family { Sinusoid, Linear, Harmonic, Sigmoid, Sawtooth, Square };

inline const std::vector<Family>& all_families() {
    static const std::vector<Family> fams = {Family::Sinusoid, Family::Linear,
                                             Family::Harmonic, Family::Sigmoid,
                                             Family::Sawtooth, Family::Square};
    return fams;
}

inline std::string to_string(Family f) {
    switch (f) {
        case Family::Sinusoid: return "sinusoid";
        case Family::Linear: return "linear";
        case Family::Harmonic: return "harmonic";
        case Family::Sigmoid: return "sigmoid";
        case Family::Sawtooth: return "sawtooth";
        case Family::Square: return "square";
    }
    throw config_error("unknown family");
}

inline Family family_from_string(const std::string& name) {
    for (Family f : all_families())
        if (to_string(f) == name) return f;
    throw config_error("unknown signal family: " + name);
}

// Parameter order per family:
//   sinusoid:  amplitude, frequency, phase
//   linear:    slope, intercept
//   harmonic:  a1, f1, p1, a2, f2, p2   (two sinusoid terms)
//   sigmoid:   amplitude, steepness, center
//   sawtooth:  amplitude, period, phase
//   square:    amplitude, period, phase
inline std::size_t param_count(Family f) {
    switch (f) {
        case Family::Linear: return 2;
        case Family::Harmonic: return 6;
        default: return 3;
    }
}

struct FunctionSpec {
    Family family = Family::Linear;
    std::vector<double> params;

    void validate() const {
        if (params.size() != param_count(family))
            throw config_error("FunctionSpec: wrong parameter count for " + to_string(family));
        for (double v : params)
            if (!std::isfinite(v)) throw config_error("FunctionSpec: non-finite parameter");
        switch (family) {
            case Family::Sinusoid:
            case Family::Sigmoid:
                if (!(params[0] > 0.0)) throw config_error("FunctionSpec: amplitude must be > 0");
                break;
            case Family::Sawtooth:
            case Family::Square:
                if (!(params[0] > 0.0)) throw config_error("FunctionSpec: amplitude must be > 0");
                if (!(params[1] > 0.0)) throw config_error("FunctionSpec: period must be > 0");
                break;
            case Family::Harmonic:
                if (!(params[0] > 0.0 && params[3] > 0.0))
                    throw config_error("FunctionSpec: amplitudes must be > 0");
                break;
            case Family::Linear:
                break;
        }
    }
};

inline double eval_function(const FunctionSpec& spec, double x) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    const auto& p = spec.params;
    switch (spec.family) {
        case Family::Linear:
            return p[0] * x + p[1];
        case Family::Sinusoid:
            return p[0] * std::sin(two_pi * p[1] * x + p[2]);
        case Family::Harmonic:
            return p[0] * std::sin(two_pi * p[1] * x + p[2]) +
                   p[3] * std::sin(two_pi * p[4] * x + p[5]);
        case Family::Sigmoid:
            return p[0] / (1.0 + std::exp(-p[1] * (x - p[2])));
        case Family::Sawtooth: {
            const double t = x / p[1] + p[2] / two_pi;
            return p[0] * (2.0 * (t - std::floor(t)) - 1.0);
        }
        case Family::Square: {
            const double s = std::sin(two_pi * x / p[1] + p[2]);
            return s >= 0.0 ? p[0] : -p[0];  // sign(0) = +1
        }
    }
    throw config_error("unknown family");
}

struct ParamRange {
    double lo = 0.0;
    double hi = 0.0;  // lo == hi pins the parameter

    void validate() const {
        if (!std::isfinite(lo) || !std::isfinite(hi) || lo > hi)
            throw config_error("ParamRange: need finite lo <= hi");
    }
};

struct MixtureSpec {
    std::vector<Family> families;                   // ordered, no duplicates
    std::map<Family, std::vector<ParamRange>> ranges;

    void validate() const {
        if (families.empty()) throw config_error("MixtureSpec: families must be non-empty");
        for (Family f : families) {
            auto it = ranges.find(f);
            if (it == ranges.end())
                throw config_error("MixtureSpec: missing ranges for " + to_string(f));
            if (it->second.size() != param_count(f))
                throw config_error("MixtureSpec: wrong range count for " + to_string(f));
            for (const auto& r : it->second) r.validate();
        }
    }
};

// Ranges keep signals in roughly [-2, 2] over the default grid so tanh nets
// stay in a sane operating range. Sigmoid centers land inside the grid span.
inline std::vector<ParamRange> default_ranges(Family f, double x_lo = 0.0, double x_hi = 9.5) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    const ParamRange amplitude{0.5, 2.0};
    const ParamRange frequency{0.2, 1.5};
    const ParamRange phase{0.0, two_pi};
    const ParamRange period{1.0 / 1.5, 1.0 / 0.2};
    switch (f) {
        case Family::Sinusoid: return {amplitude, frequency, phase};
        case Family::Linear: return {{-1.0, 1.0}, {-1.0, 1.0}};
        case Family::Harmonic:
            return {amplitude, frequency, phase, {0.25, 1.0}, frequency, phase};
        case Family::Sigmoid: return {amplitude, {1.0, 8.0}, {x_lo, x_hi}};
        case Family::Sawtooth: return {amplitude, period, phase};
        case Family::Square: return {amplitude, period, phase};
    }
    throw config_error("unknown family");
}

inline MixtureSpec make_mixture(const std::vector<Family>& families, double x_lo = 0.0,
                                double x_hi = 9.5) {
    MixtureSpec m;
    m.families = families;
    for (Family f : families) m.ranges[f] = default_ranges(f, x_lo, x_hi);
    m.validate();
    return m;
}

// Family uniform among mixture.families (draw 0), then parameters uniform in
// their ranges (draws 1..k). Pure function of (mixture, seed).
inline FunctionSpec sample_function(const MixtureSpec& mixture, std::uint64_t seed) {
    mixture.validate();
    const std::size_t fi = static_cast<std::size_t>(
        rng::bounded(rng::counter_word(seed, 0), mixture.families.size()));
    FunctionSpec spec;
    spec.family = mixture.families[fi];
    const auto& ranges = mixture.ranges.at(spec.family);
    spec.params.resize(ranges.size());
    for (std::size_t j = 0; j < ranges.size(); ++j) {
        const double u = rng::uniform(seed, j + 1);
        spec.params[j] = ranges[j].lo + u * (ranges[j].hi - ranges[j].lo);
    }
    spec.validate();
    return spec;
}

struct Grid {
    double x0 = 0.0;
    double dx = 0.1;
    int n_points = 96;

    void validate() const {
        if (!(dx > 0.0) || n_points < 1) throw config_error("Grid: need dx > 0 and n_points >= 1");
    }

    double x_at(int i) const { return x0 + dx * i; }
};

inline std::vector<double> sample_grid(const FunctionSpec& spec, const Grid& grid) {
    grid.validate();
    std::vector<double> ys(static_cast<std::size_t>(grid.n_points));
    for (int i = 0; i < grid.n_points; ++i) ys[static_cast<std::size_t>(i)] = eval_function(spec, grid.x_at(i));
    return ys;
}

struct Provenance {
    MixtureSpec mixture;
    std::uint64_t seed = 0;
    Grid grid;
    int n_functions = 0;
    int context_len = 0;
};

struct SignalDataset {
    std::vector<nnet::Sample> items;
    Provenance provenance;
};

// Every length-(context_len+1) sliding window of each sampled function's grid
// values contributes one item; total = n_functions * (n_points - context_len).
inline SignalDataset make_dataset(const MixtureSpec& mixture, int n_functions, int context_len,
                                  const Grid& grid, std::uint64_t seed) {
    mixture.validate();
    grid.validate();
    if (n_functions < 1) throw config_error("make_dataset: n_functions must be >= 1");
    if (context_len < 1) throw config_error("make_dataset: context_len must be >= 1");
    if (grid.n_points <= context_len)
        throw config_error("make_dataset: n_points must exceed context_len");

    SignalDataset ds;
    ds.provenance = {mixture, seed, grid, n_functions, context_len};
    ds.items.reserve(static_cast<std::size_t>(n_functions) *
                     static_cast<std::size_t>(grid.n_points - context_len));
    for (int f = 0; f < n_functions; ++f) {
        const FunctionSpec spec =
            sample_function(mixture, rng::hash64(seed, static_cast<std::uint64_t>(f)));
        const std::vector<double> ys = sample_grid(spec, grid);
        for (int w = 0; w + context_len < grid.n_points; ++w) {
            nnet::Sample item;
            item.context.assign(ys.begin() + w, ys.begin() + w + context_len);
            item.target = ys[static_cast<std::size_t>(w + context_len)];
            ds.items.push_back(std::move(item));
        }
    }
    return ds;
}

// A continuation probe: observed context, ground-truth continuation, and a
// scorer where higher is better (zero is perfect).
struct ContinuationTask {
    FunctionSpec spec;
    std::vector<double> context;
    std::vector<double> truth;

    double score(std::span<const double> prediction) const {
        if (prediction.size() != truth.size())
            throw config_error("ContinuationTask: prediction length mismatch");
        double mse = 0.0;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            const double d = prediction[i] - truth[i];
            mse += d * d;
        }
        return truth.empty() ? 0.0 : -mse / static_cast<double>(truth.size());
    }
};

inline ContinuationTask continuation_task(const FunctionSpec& spec, const Grid& grid,
                                          int context_len, int horizon) {
    spec.validate();
    grid.validate();
    if (context_len < 1 || horizon < 0) throw config_error("continuation_task: bad sizes");
    if (grid.n_points < context_len + horizon)
        throw config_error("continuation_task: grid too short for context + horizon");
    const std::vector<double> ys = sample_grid(spec, grid);
    ContinuationTask task;
    task.spec = spec;
    task.context.assign(ys.begin(), ys.begin() + context_len);
    task.truth.assign(ys.begin() + context_len, ys.begin() + context_len + horizon);
    return task;
}

}  // namespace thicket::signals
