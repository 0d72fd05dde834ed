#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "thicket/errors.hpp"
#include "thicket/nnet.hpp"
#include "thicket/rng.hpp"

namespace thicket::perturb {

// (seed, sigma) deterministically identifies one perturbed model
// theta' = theta + sigma * eps(seed). Perturbed weights are never persisted;
// this pair is all a manifest needs to reconstruct them.
struct PerturbationSpec {
    std::uint64_t seed = 0;
    double sigma = 0.0;

    void validate() const {
        if (!(sigma >= 0.0) || !std::isfinite(sigma))
            throw config_error("PerturbationSpec: sigma must be finite and >= 0");
    }
};

struct SigmaSet {
    std::vector<double> values;

    void validate() const {
        if (values.empty()) throw config_error("SigmaSet: must be non-empty");
        for (double s : values)
            if (!(s > 0.0) || !std::isfinite(s))
                throw config_error("SigmaSet: scales must be finite and > 0");
    }
};

// Standard-normal vector keyed only by seed. Counter-based, so any worker can
// draw any coordinate in any order with identical results, and noise(seed, d1)
// is a prefix of noise(seed, d2) for d1 < d2.
inline std::vector<double> noise(std::uint64_t seed, std::size_t dim) {
    if (dim < 1) throw config_error("noise: dim must be >= 1");
    std::vector<double> eps(dim);
    for (std::size_t i = 0; i < dim; ++i) eps[i] = rng::normal(seed, i);
    return eps;
}

inline nnet::ParamVector apply(const nnet::ParamVector& theta, const PerturbationSpec& spec) {
    spec.validate();
    nnet::ParamVector out = theta;
    if (spec.sigma == 0.0) return out;
    for (std::size_t i = 0; i < out.values.size(); ++i)
        out.values[i] += spec.sigma * rng::normal(spec.seed, i);
    return out;
}

// Contiguous equal blocks in list order, block width floor(n/M); the remainder
// (and everything, when n < M) falls to the last scale. This is the literal
// index arithmetic sigmas[i / (n / M)] with the out-of-range indices clamped.
inline std::vector<double> assign_sigmas(int n, const SigmaSet& sigmas) {
    sigmas.validate();
    if (n < 1) throw config_error("assign_sigmas: n must be >= 1");
    const std::size_t m = sigmas.values.size();
    const std::size_t width = static_cast<std::size_t>(n) / m;
    std::vector<double> out(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < out.size(); ++i) {
        const std::size_t idx = width == 0 ? m - 1 : std::min(i / width, m - 1);
        out[i] = sigmas.values[idx];
    }
    return out;
}

}  // namespace thicket::perturb
