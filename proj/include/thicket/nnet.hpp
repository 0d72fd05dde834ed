#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "thicket/errors.hpp"
#include "thicket/rng.hpp"

namespace thicket::nnet {

enum class Activation { Tanh, Relu };

inline std::string to_string(Activation a) {
    return a == Activation::Tanh ? "tanh" : "relu";
}

// Dense next-value predictor: context_len inputs -> hidden layers -> 1 linear output.
struct MlpConfig {
    int context_len = 16;
    std::vector<int> hidden = {64, 64};
    Activation activation = Activation::Tanh;

    void validate() const {
        if (context_len < 1) throw config_error("MlpConfig: context_len must be >= 1");
        if (hidden.empty()) throw config_error("MlpConfig: hidden layers must be non-empty");
        for (int h : hidden)
            if (h < 1) throw config_error("MlpConfig: hidden widths must be positive");
    }

    // {context_len, hidden..., 1}
    std::vector<int> layer_dims() const {
        std::vector<int> dims;
        dims.reserve(hidden.size() + 2);
        dims.push_back(context_len);
        dims.insert(dims.end(), hidden.begin(), hidden.end());
        dims.push_back(1);
        return dims;
    }

    std::size_t param_count() const {
        const auto dims = layer_dims();
        std::size_t n = 0;
        for (std::size_t l = 0; l + 1 < dims.size(); ++l)
            n += (static_cast<std::size_t>(dims[l]) + 1) * static_cast<std::size_t>(dims[l + 1]);
        return n;
    }
};

struct LayerLayout {
    int layer_index = 0;
    std::size_t weight_offset = 0;  // row-major [fan_out][fan_in]
    std::size_t bias_offset = 0;    // fan_out entries
    int fan_in = 0;
    int fan_out = 0;
};

inline std::vector<LayerLayout> layout_for(const MlpConfig& config) {
    config.validate();
    const auto dims = config.layer_dims();
    std::vector<LayerLayout> layout;
    layout.reserve(dims.size() - 1);
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        LayerLayout rec;
        rec.layer_index = static_cast<int>(l);
        rec.fan_in = dims[l];
        rec.fan_out = dims[l + 1];
        rec.weight_offset = offset;
        rec.bias_offset = offset + static_cast<std::size_t>(rec.fan_in) * rec.fan_out;
        offset = rec.bias_offset + static_cast<std::size_t>(rec.fan_out);
        layout.push_back(rec);
    }
    return layout;
}

// Flat 64-bit weight vector plus the layout tying offsets to layers.
struct ParamVector {
    std::vector<double> values;
    std::vector<LayerLayout> layout;

    std::size_t dim() const { return values.size(); }

    bool same_layout(const ParamVector& other) const {
        if (layout.size() != other.layout.size()) return false;
        for (std::size_t i = 0; i < layout.size(); ++i) {
            const auto& a = layout[i];
            const auto& b = other.layout[i];
            if (a.fan_in != b.fan_in || a.fan_out != b.fan_out ||
                a.weight_offset != b.weight_offset || a.bias_offset != b.bias_offset)
                return false;
        }
        return true;
    }
};

inline ParamVector zeros(const MlpConfig& config) {
    ParamVector p;
    p.layout = layout_for(config);
    p.values.assign(config.param_count(), 0.0);
    return p;
}

inline void check_match(const ParamVector& params, const MlpConfig& config) {
    const auto expected = layout_for(config);
    if (params.layout.size() != expected.size())
        throw config_error("params/config mismatch: layer count");
    for (std::size_t i = 0; i < expected.size(); ++i) {
        if (params.layout[i].fan_in != expected[i].fan_in ||
            params.layout[i].fan_out != expected[i].fan_out)
            throw config_error("params/config mismatch: layer " + std::to_string(i) + " shape");
    }
    if (params.values.size() != config.param_count())
        throw config_error("params/config mismatch: value count");
}

enum class InitScheme { Xavier, Kaiming };

inline std::string to_string(InitScheme s) {
    return s == InitScheme::Xavier ? "xavier" : "kaiming";
}

// Biases zero. Xavier: uniform on (-a, a) with a^2/3 = 2/(fan_in+fan_out).
// Kaiming: normal with variance 2/fan_in. The draw for a given weight slot is
// keyed by (seed, flat index), so identical inputs give bit-identical vectors.
inline ParamVector init_params(const MlpConfig& config, InitScheme scheme, std::uint64_t seed) {
    ParamVector p = zeros(config);
    for (const auto& layer : p.layout) {
        const std::size_t n_w = static_cast<std::size_t>(layer.fan_in) * layer.fan_out;
        if (scheme == InitScheme::Xavier) {
            const double a = std::sqrt(6.0 / (layer.fan_in + layer.fan_out));
            for (std::size_t j = 0; j < n_w; ++j) {
                const std::size_t slot = layer.weight_offset + j;
                p.values[slot] = a * (2.0 * rng::uniform(seed, slot) - 1.0);
            }
        } else {
            const double stddev = std::sqrt(2.0 / layer.fan_in);
            for (std::size_t j = 0; j < n_w; ++j) {
                const std::size_t slot = layer.weight_offset + j;
                p.values[slot] = stddev * rng::normal(seed, slot);
            }
        }
    }
    return p;
}

// Scratch buffers shared across forward calls in a hot loop.
struct Workspace {
    std::vector<double> a;
    std::vector<double> b;
};

namespace detail {

inline double activate(double z, Activation act) {
    return act == Activation::Tanh ? std::tanh(z) : (z > 0.0 ? z : 0.0);
}

inline double forward_ws(const ParamVector& params, const MlpConfig& config,
                         std::span<const double> context, Workspace& ws) {
    ws.a.assign(context.begin(), context.end());
    const double* vals = params.values.data();
    for (std::size_t l = 0; l < params.layout.size(); ++l) {
        const auto& layer = params.layout[l];
        const bool last = (l + 1 == params.layout.size());
        ws.b.resize(static_cast<std::size_t>(layer.fan_out));
        for (int o = 0; o < layer.fan_out; ++o) {
            const double* w = vals + layer.weight_offset +
                              static_cast<std::size_t>(o) * layer.fan_in;
            double z = vals[layer.bias_offset + o];
            for (int i = 0; i < layer.fan_in; ++i) z += w[i] * ws.a[static_cast<std::size_t>(i)];
            ws.b[static_cast<std::size_t>(o)] = last ? z : activate(z, config.activation);
        }
        ws.a.swap(ws.b);
    }
    return ws.a[0];
}

}  // namespace detail

// Workspace overload for hot loops; no allocation once ws buffers are warm.
inline double forward(const ParamVector& params, const MlpConfig& config,
                      std::span<const double> context, Workspace& ws) {
    if (context.size() != static_cast<std::size_t>(config.context_len))
        throw config_error("forward: context length " + std::to_string(context.size()) +
                           " != context_len " + std::to_string(config.context_len));
    return detail::forward_ws(params, config, context, ws);
}

inline double forward(const ParamVector& params, const MlpConfig& config,
                      std::span<const double> context) {
    check_match(params, config);
    Workspace ws;
    return forward(params, config, context, ws);
}

// Autoregressive continuation: output[t] is the prediction on the sliding
// window formed by the last context_len values of (context ++ output[0..t)).
inline std::vector<double> rollout(const ParamVector& params, const MlpConfig& config,
                                   std::span<const double> context, int horizon) {
    check_match(params, config);
    if (context.size() != static_cast<std::size_t>(config.context_len))
        throw config_error("rollout: context length mismatch");
    if (horizon < 0) throw config_error("rollout: horizon must be >= 0");
    std::vector<double> window(context.begin(), context.end());
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(horizon));
    Workspace ws;
    for (int t = 0; t < horizon; ++t) {
        const double y = detail::forward_ws(params, config, window, ws);
        out.push_back(y);
        for (std::size_t i = 0; i + 1 < window.size(); ++i) window[i] = window[i + 1];
        window.back() = y;
    }
    return out;
}

// One (context, next-value) training item.
struct Sample {
    std::vector<double> context;
    double target = 0.0;
};

namespace detail {

// Gradient of mean squared error over the batch; also returns the loss.
// Per-layer pre-activations are cached for the backward pass.
struct GradScratch {
    std::vector<std::vector<double>> acts;   // activations per layer (incl. input)
    std::vector<std::vector<double>> zs;     // pre-activations per non-input layer
    std::vector<double> delta;
    std::vector<double> delta_next;
};

inline double accumulate_grad(const ParamVector& params, const MlpConfig& config,
                              std::span<const Sample> batch, ParamVector& grad,
                              GradScratch& scratch) {
    const std::size_t n_layers = params.layout.size();
    scratch.acts.resize(n_layers + 1);
    scratch.zs.resize(n_layers);

    double loss = 0.0;
    const double* vals = params.values.data();
    double* g = grad.values.data();
    const double inv_batch = 1.0 / static_cast<double>(batch.size());

    for (const Sample& sample : batch) {
        if (sample.context.size() != static_cast<std::size_t>(config.context_len))
            throw config_error("grad: sample context length mismatch");
        scratch.acts[0].assign(sample.context.begin(), sample.context.end());
        for (std::size_t l = 0; l < n_layers; ++l) {
            const auto& layer = params.layout[l];
            const bool last = (l + 1 == n_layers);
            auto& z = scratch.zs[l];
            auto& a = scratch.acts[l + 1];
            z.resize(static_cast<std::size_t>(layer.fan_out));
            a.resize(static_cast<std::size_t>(layer.fan_out));
            for (int o = 0; o < layer.fan_out; ++o) {
                const double* w = vals + layer.weight_offset +
                                  static_cast<std::size_t>(o) * layer.fan_in;
                double s = vals[layer.bias_offset + o];
                for (int i = 0; i < layer.fan_in; ++i)
                    s += w[i] * scratch.acts[l][static_cast<std::size_t>(i)];
                z[static_cast<std::size_t>(o)] = s;
                a[static_cast<std::size_t>(o)] = last ? s : activate(s, config.activation);
            }
        }
        const double pred = scratch.acts[n_layers][0];
        const double residual = pred - sample.target;
        loss += residual * residual * inv_batch;

        // d(loss)/d(pred); output layer is linear.
        scratch.delta.assign(1, 2.0 * residual * inv_batch);
        for (std::size_t l = n_layers; l-- > 0;) {
            const auto& layer = params.layout[l];
            auto& delta = scratch.delta;
            auto& delta_prev = scratch.delta_next;
            delta_prev.assign(static_cast<std::size_t>(layer.fan_in), 0.0);
            for (int o = 0; o < layer.fan_out; ++o) {
                const double d = delta[static_cast<std::size_t>(o)];
                if (d == 0.0) continue;
                const std::size_t w_off =
                    layer.weight_offset + static_cast<std::size_t>(o) * layer.fan_in;
                const double* w = vals + w_off;
                double* gw = g + w_off;
                const auto& a_prev = scratch.acts[l];
                for (int i = 0; i < layer.fan_in; ++i) {
                    gw[i] += d * a_prev[static_cast<std::size_t>(i)];
                    delta_prev[static_cast<std::size_t>(i)] += d * w[i];
                }
                g[layer.bias_offset + o] += d;
            }
            if (l > 0) {
                // push through the previous layer's nonlinearity
                const auto& z_prev = scratch.zs[l - 1];
                for (std::size_t i = 0; i < delta_prev.size(); ++i) {
                    if (config.activation == Activation::Tanh) {
                        const double t = std::tanh(z_prev[i]);
                        delta_prev[i] *= 1.0 - t * t;
                    } else {
                        delta_prev[i] *= z_prev[i] > 0.0 ? 1.0 : 0.0;
                    }
                }
            }
            delta.swap(delta_prev);
        }
    }
    return loss;
}

}  // namespace detail

inline ParamVector grad(const ParamVector& params, const MlpConfig& config,
                        std::span<const Sample> batch) {
    check_match(params, config);
    if (batch.empty()) throw config_error("grad: empty batch");
    ParamVector g = zeros(config);
    detail::GradScratch scratch;
    detail::accumulate_grad(params, config, batch, g, scratch);
    return g;
}

struct OptHparams {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    int batch_size = 64;
    int epochs = 100;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(learning_rate >= 0.0)) throw config_error("OptHparams: learning_rate must be >= 0");
        if (!(beta1 > 0.0 && beta1 < 1.0)) throw config_error("OptHparams: beta1 must be in (0,1)");
        if (!(beta2 > 0.0 && beta2 < 1.0)) throw config_error("OptHparams: beta2 must be in (0,1)");
        if (!(epsilon > 0.0)) throw config_error("OptHparams: epsilon must be > 0");
        if (batch_size < 1) throw config_error("OptHparams: batch_size must be >= 1");
        if (epochs < 0) throw config_error("OptHparams: epochs must be >= 0");
    }
};

struct TrainResult {
    ParamVector params;
    std::vector<double> loss_curve;  // mean epoch loss
};

// Adam on mean squared next-value error. Shuffling is a pure function of
// (seed, epoch); the whole call is deterministic in its inputs.
inline TrainResult train(const ParamVector& start, const MlpConfig& config,
                         std::span<const Sample> dataset, const OptHparams& hparams) {
    check_match(start, config);
    hparams.validate();
    if (dataset.empty()) throw config_error("train: empty dataset");

    TrainResult result;
    result.params = start;
    auto& theta = result.params.values;
    std::vector<double> m(theta.size(), 0.0);
    std::vector<double> v(theta.size(), 0.0);

    std::vector<std::size_t> order(dataset.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    ParamVector g = zeros(config);
    detail::GradScratch scratch;
    std::vector<Sample> batch;
    long step = 0;

    for (int epoch = 0; epoch < hparams.epochs; ++epoch) {
        // Fisher-Yates keyed by (seed, epoch); std::shuffle is implementation-defined.
        const std::uint64_t shuffle_key = rng::hash64(hparams.seed, static_cast<std::uint64_t>(epoch));
        for (std::size_t i = order.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(
                rng::bounded(rng::counter_word(shuffle_key, i), i));
            std::swap(order[i - 1], order[j]);
        }

        double epoch_loss = 0.0;
        std::size_t seen = 0;
        for (std::size_t begin = 0; begin < order.size();
             begin += static_cast<std::size_t>(hparams.batch_size)) {
            const std::size_t end =
                std::min(order.size(), begin + static_cast<std::size_t>(hparams.batch_size));
            batch.clear();
            for (std::size_t i = begin; i < end; ++i) batch.push_back(dataset[order[i]]);

            std::fill(g.values.begin(), g.values.end(), 0.0);
            const double loss = detail::accumulate_grad(result.params, config, batch, g, scratch);
            if (!std::isfinite(loss))
                throw numerical_error("train: non-finite loss at epoch " + std::to_string(epoch) +
                                      ", batch " + std::to_string(begin / hparams.batch_size));
            epoch_loss += loss * static_cast<double>(batch.size());
            seen += batch.size();

            ++step;
            const double bc1 = 1.0 - std::pow(hparams.beta1, static_cast<double>(step));
            const double bc2 = 1.0 - std::pow(hparams.beta2, static_cast<double>(step));
            for (std::size_t i = 0; i < theta.size(); ++i) {
                m[i] = hparams.beta1 * m[i] + (1.0 - hparams.beta1) * g.values[i];
                v[i] = hparams.beta2 * v[i] + (1.0 - hparams.beta2) * g.values[i] * g.values[i];
                theta[i] -= hparams.learning_rate * (m[i] / bc1) /
                            (std::sqrt(v[i] / bc2) + hparams.epsilon);
            }
        }
        result.loss_curve.push_back(epoch_loss / static_cast<double>(seen));
    }
    return result;
}

// Per-layer view for the layout round-trip.
struct LayerWeights {
    int fan_in = 0;
    int fan_out = 0;
    std::vector<double> w;  // row-major [fan_out][fan_in]
    std::vector<double> b;
};

inline std::vector<LayerWeights> unflatten(const ParamVector& params) {
    std::vector<LayerWeights> layers;
    layers.reserve(params.layout.size());
    for (const auto& rec : params.layout) {
        LayerWeights lw;
        lw.fan_in = rec.fan_in;
        lw.fan_out = rec.fan_out;
        const std::size_t n_w = static_cast<std::size_t>(rec.fan_in) * rec.fan_out;
        lw.w.assign(params.values.begin() + static_cast<std::ptrdiff_t>(rec.weight_offset),
                    params.values.begin() + static_cast<std::ptrdiff_t>(rec.weight_offset + n_w));
        lw.b.assign(params.values.begin() + static_cast<std::ptrdiff_t>(rec.bias_offset),
                    params.values.begin() +
                        static_cast<std::ptrdiff_t>(rec.bias_offset + rec.fan_out));
        layers.push_back(std::move(lw));
    }
    return layers;
}

inline ParamVector flatten(const std::vector<LayerWeights>& layers) {
    ParamVector p;
    std::size_t offset = 0;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& lw = layers[l];
        LayerLayout rec;
        rec.layer_index = static_cast<int>(l);
        rec.fan_in = lw.fan_in;
        rec.fan_out = lw.fan_out;
        rec.weight_offset = offset;
        rec.bias_offset = offset + lw.w.size();
        offset = rec.bias_offset + lw.b.size();
        p.layout.push_back(rec);
        p.values.insert(p.values.end(), lw.w.begin(), lw.w.end());
        p.values.insert(p.values.end(), lw.b.begin(), lw.b.end());
    }
    return p;
}

}  // namespace thicket::nnet
